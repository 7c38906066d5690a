"""``odoflow`` command-line driver.

Exit status: 0 when every check passes, 1 when a check fails or the
computation cannot be completed at the requested depth, 2 on usage errors.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import certify, reports
from .ceiling import CeilingSpec, SuspensionSystem, k_table_rows
from .errors import OdoflowError
from .space import CoordinateScheme, CylinderSet, Relabeling, Weighting, format_fraction, parse_fraction
from .statistics import (
    conjugacy_consistency,
    decay_table,
    interval_bound_report,
    rectangle_inclusions,
    prop51_check,
    prop_a_window_set,
    rectangle_flow_window_measure,
    return_window_set,
)
from .windows import parse_window, window_from_log_scale

MAX_PREFIXES = 2 ** 30


@dataclass
class RunConfig:
    depth: int
    scheme: str = "paper"
    ceiling: str = "factorial"
    precision_cap: int = certify.DEFAULT_PRECISION_CAP
    allow_large_depth: bool = False
    jobs: int = 1

    def build_scheme(self) -> CoordinateScheme:
        if self.depth < 1:
            raise click.BadParameter("depth must be positive", param_hint="--depth")
        if self.scheme == "paper":
            scheme = CoordinateScheme.paper(self.depth)
        elif self.scheme.startswith("bernoulli:"):
            try:
                scheme = CoordinateScheme.bernoulli(self.scheme.split(":", 1)[1], self.depth)
            except (ValueError, ZeroDivisionError) as exc:
                raise click.BadParameter(str(exc), param_hint="--scheme") from None
        else:
            raise click.BadParameter(f"expected paper or bernoulli:<p/q>, got {self.scheme!r}",
                                     param_hint="--scheme")
        if scheme.total > MAX_PREFIXES and not self.allow_large_depth:
            raise click.BadParameter(
                f"depth {self.depth} enumerates {scheme.total} prefixes; pass --allow-large-depth to insist",
                param_hint="--depth",
            )
        return scheme

    def build_ceiling(self) -> CeilingSpec:
        if self.ceiling == "factorial":
            return CeilingSpec.factorial()
        if self.ceiling.startswith("constant:"):
            try:
                return CeilingSpec.of_constant(int(self.ceiling.split(":", 1)[1]))
            except ValueError as exc:
                raise click.BadParameter(str(exc), param_hint="--ceiling") from None
        raise click.BadParameter(f"expected factorial or constant:<c>, got {self.ceiling!r}",
                                 param_hint="--ceiling")


def _config(kw) -> RunConfig:
    return RunConfig(
        depth=kw["depth"],
        scheme=kw.get("scheme", "paper"),
        ceiling=kw.get("ceiling", "factorial"),
        precision_cap=kw.get("precision_cap", certify.DEFAULT_PRECISION_CAP),
        allow_large_depth=kw.get("allow_large_depth", False),
        jobs=kw.get("jobs", 1),
    )


def _fraction(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"expected p/q, got {value!r}") from None


def depth_option(f):
    return click.option("--depth", type=int, required=True, help="Truncation depth M.")(f)


def scheme_options(f):
    f = click.option("--allow-large-depth", is_flag=True, help="Permit enumerations above 2^30 prefixes.")(f)
    f = click.option("--precision-cap", type=click.IntRange(2), default=certify.DEFAULT_PRECISION_CAP,
                     show_default=True, help="Bit cap for certified comparisons.")(f)
    f = click.option("--ceiling", default="factorial", show_default=True, help="factorial | constant:<c>")(f)
    f = click.option("--scheme", default="paper", show_default=True, help="paper | bernoulli:<p/q>")(f)
    return depth_option(f)


def window_options(f):
    f = click.option("--mirrored", is_flag=True, help="Also test the reflected interval (-hi, -lo).")(f)
    f = click.option("--delta", callback=_fraction, help="Log-scale half width (with --s).")(f)
    f = click.option("--s", "s", callback=_fraction, help="Log-scale centre; window (e^(s-delta), e^(s+delta)).")(f)
    f = click.option("--window", help="lo:hi, optionally bracketed like [lo:hi); K<n> endpoints allowed.")(f)
    return f


def set_options(f):
    f = click.option("--where", multiple=True, help="Coordinate constraint n=v or n=v1,v2 (repeatable).")(f)
    f = click.option("--set", "set_path", type=click.Path(dir_okay=False), help="CylinderSet JSON file.")(f)
    return f


def _window(kw, cap):
    if kw.get("window") and kw.get("s") is not None:
        raise click.UsageError("give either --window or --s/--delta, not both")
    if kw.get("window"):
        try:
            return parse_window(kw["window"], kw.get("mirrored", False))
        except (ValueError, ZeroDivisionError) as exc:
            raise click.BadParameter(str(exc), param_hint="--window") from None
    if kw.get("s") is not None:
        if kw.get("delta") is None:
            raise click.BadParameter("--s needs --delta", param_hint="--delta")
        return window_from_log_scale(kw["s"], kw["delta"], cap, mirrored=kw.get("mirrored", False))
    raise click.UsageError("a window is required: --window lo:hi or --s p/q --delta p/q")


def _target_set(kw, scheme: CoordinateScheme) -> CylinderSet:
    path = kw.get("set_path")
    if path:
        try:
            cset = CylinderSet.from_json(json.loads(Path(path).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise click.BadParameter(str(exc), param_hint="--set") from None
        if cset.depth != scheme.depth:
            raise click.BadParameter(f"set depth {cset.depth} != --depth {scheme.depth}", param_hint="--set")
    else:
        cset = CylinderSet.full(scheme)
    constraints = {}
    for item in kw.get("where") or ():
        try:
            coord, vals = item.split("=", 1)
            constraints[int(coord)] = [int(v) for v in vals.split(",")]
        except ValueError:
            raise click.BadParameter(f"expected n=v[,v...], got {item!r}", param_hint="--where") from None
    if constraints:
        try:
            cset = cset & CylinderSet.where(scheme, constraints)
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--where") from None
    return cset


def _write(path, text):
    if path:
        reports.atomic_write(path, text)


def _fail(message: str):
    click.echo(message, err=True)
    sys.exit(1)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except OdoflowError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(1)


@click.group(cls=_Group)
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="JSON file of option defaults; command-line flags win.")
@click.pass_context
def main(ctx, config):
    """Exact finite-depth checks for odometer suspension flows."""
    if config:
        try:
            data = json.loads(Path(config).read_text())
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--config") from None
        data = {k.replace("-", "_"): v for k, v in data.items()}
        ctx.default_map = {name: data for name in main.commands}


@main.command()
@click.option("--max", "max_n", type=click.IntRange(4), required=True, help="Largest n.")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV output path (stdout if omitted).")
def kvalues(max_n, out):
    """Table of K_n = 1! 2! ... n!."""
    text = reports.k_table_csv(k_table_rows(max_n))
    if out:
        _write(out, text)
    else:
        click.echo(text, nl=False)


@main.command()
@depth_option
@click.option("--variant", type=click.Choice(["printed", "corrected"]), default="corrected", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Violations CSV.")
def prop51(depth, variant, out):
    """Exhaustive check of the coordinate forced by sums in [K_n, K_{n+1})."""
    if depth < 3:
        raise click.BadParameter("the exhaustive check needs depth >= 3", param_hint="--depth")
    RunConfig(depth).build_scheme()
    records = prop51_check(depth, variant)
    _write(out, reports.violations_csv(records))
    click.echo(f"{len(records)} violations")
    for r in records[:10]:
        click.echo(f"  {r.direction} prefix={r.prefix} k={r.k} n={r.n}: x_{r.expected_index} "
                   f"= {r.observed_value}, claimed {r.expected_value}")
    if variant == "corrected" and records:
        _fail("corrected claim violated")


@main.command()
@depth_option
@click.option("--from", "n_from", type=click.IntRange(4), default=4, show_default=True)
@click.option("--to", "n_to", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Bounds CSV.")
def bounds(depth, n_from, n_to, out):
    """Measures for each K-interval against the corrected and printed bounds."""
    RunConfig(depth).build_scheme()
    rows = interval_bound_report(depth, range(n_from, n_to + 1))
    text = reports.bounds_csv(rows)
    _write(out, text)
    click.echo(text, nl=False)
    bad = [r.n for r in rows if not (r.forward_ok_corrected and r.backward_ok_corrected) or r.undetermined]
    if bad:
        _fail(f"corrected bound fails for n in {bad}")


@main.command()
@scheme_options
@set_options
@click.option("--family", type=click.Choice(["k-intervals", "log-scale"]), default="k-intervals",
              show_default=True)
@click.option("--from", "n_from", type=int, help="First n (k-intervals).")
@click.option("--to", "n_to", type=int, help="Last n (k-intervals).")
@click.option("--s-grid", help="Comma-separated s values (log-scale).")
@click.option("--delta", callback=_fraction, help="Half width on the log scale (log-scale).")
@click.option("--jobs", type=click.IntRange(1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Decay CSV.")
@click.option("--svg", type=click.Path(dir_okay=False), help="Decay curve SVG.")
def decay(family, n_from, n_to, s_grid, delta, jobs, out, svg, **kw):
    """Return-set measure along a family of windows, with the envelope column."""
    kw["jobs"] = jobs
    cfg = _config(kw)
    scheme, spec = cfg.build_scheme(), cfg.build_ceiling()
    if family == "k-intervals":
        if n_from is None or n_to is None:
            raise click.UsageError("k-intervals needs --from and --to")
        grid = range(n_from, n_to + 1)
    else:
        if not s_grid or delta is None:
            raise click.UsageError("log-scale needs --s-grid and --delta")
        try:
            grid = [parse_fraction(v) for v in s_grid.split(",")]
        except (ValueError, ZeroDivisionError):
            raise click.BadParameter(f"bad s value in {s_grid!r}", param_hint="--s-grid") from None
    rows = decay_table(scheme, spec, family, grid, a0=_target_set(kw, scheme), delta=delta,
                       cap=cfg.precision_cap, jobs=cfg.jobs)
    text = reports.decay_csv(rows)
    _write(out, text)
    _write(svg, reports.decay_svg(rows))
    if not out:
        click.echo(text, nl=False)
    bad = [r.label for r in rows if not r.within_envelope]
    if bad:
        _fail(f"union measure exceeds the envelope at {bad}")
    click.echo(f"{len(rows)} rows within envelope")


@main.command()
@scheme_options
@set_options
@window_options
@click.option("--direction", type=click.Choice(["forward", "backward", "both"]), default=None,
              help="Defaults to both when --mirrored, else forward.")
@click.option("--out", type=click.Path(dir_okay=False), help="Summary CSV.")
@click.option("--members", type=click.Path(dir_okay=False), help="Member-set JSON.")
def delta(direction, out, members, **kw):
    """Return set of base points coming back to the set at a time in the window."""
    cfg = _config(kw)
    scheme, spec = cfg.build_scheme(), cfg.build_ceiling()
    window = _window(kw, cfg.precision_cap)
    rep = return_window_set(scheme, spec, _target_set(kw, scheme), window, direction)
    rows = [("forward", rep.forward_measure), ("backward", rep.backward_measure), ("union", rep.measure),
            ("undetermined", rep.undetermined_mass), ("boundary", rep.boundary_mass)]
    rows = [(k, v) for k, v in rows if v is not None]
    text = reports.to_csv(["quantity", "measure"], rows)
    _write(out, text)
    _write(members, reports.dump_json(rep.member_set.to_json()))
    click.echo(f"window {window.label()}")
    click.echo(text, nl=False)


@main.command("lambda-rect")
@scheme_options
@set_options
@window_options
@click.option("--band", default="0:1", show_default=True, help="Height band a:b.")
@click.option("--direction", type=click.Choice(["forward", "backward", "both"]), default=None)
@click.option("--check-inclusion", is_flag=True, help="Also check both rectangle/return-set inclusions.")
def lambda_rect(band, direction, check_inclusion, **kw):
    """Measure of the rectangle return set on the suspension space."""
    cfg = _config(kw)
    scheme, spec = cfg.build_scheme(), cfg.build_ceiling()
    window = _window(kw, cfg.precision_cap)
    try:
        a, b = (parse_fraction(v) for v in band.split(":"))
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"expected a:b, got {band!r}", param_hint="--band") from None
    a0 = _target_set(kw, scheme)
    rep = rectangle_flow_window_measure(scheme, spec, a0, (a, b), window, direction)
    click.echo(f"measure {format_fraction(rep.measure)}")
    click.echo(f"undetermined {format_fraction(rep.undetermined_mass)}")
    if check_inclusion:
        inc = rectangle_inclusions(scheme, spec, a0, (a, b), window, direction)
        click.echo(f"lambda_in_delta {str(inc.lambda_in_delta).lower()}")
        click.echo(f"delta_in_lambda {str(inc.delta_in_lambda).lower()}")
        if not (inc.lambda_in_delta and inc.delta_in_lambda):
            _fail("inclusion check failed")


@main.command("prop-a")
@scheme_options
@set_options
@window_options
@click.option("--eta", callback=_fraction, help="Report whether measure > eta * measure(set).")
def prop_a(eta, **kw):
    """Points with a log-cocycle value inside the window."""
    cfg = _config(kw)
    scheme = cfg.build_scheme()
    window = _window(kw, cfg.precision_cap)
    rep = prop_a_window_set(scheme, _target_set(kw, scheme), window, cap=cfg.precision_cap, eta=eta)
    click.echo(f"measure {format_fraction(rep.measure)}")
    click.echo(f"pairs {rep.pairs_checked}")
    if eta is not None:
        click.echo(f"exceeds_threshold {str(rep.exceeds_threshold).lower()}")


@main.command("flow-eval")
@scheme_options
@click.option("--prefix", required=True, help="Comma-separated base word.")
@click.option("--height", default="0", callback=_fraction, show_default=True)
@click.option("--t", "t", required=True, callback=_fraction, help="Flow time p/q.")
def flow_eval(prefix, height, t, **kw):
    """Evaluate the suspension flow on one point."""
    cfg = _config(kw)
    scheme, spec = cfg.build_scheme(), cfg.build_ceiling()
    try:
        base = tuple(int(v) for v in prefix.split(","))
    except ValueError:
        raise click.BadParameter(f"expected integers, got {prefix!r}", param_hint="--prefix") from None
    system = SuspensionSystem(scheme, spec)
    try:
        point = system.point(base, height)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--prefix/--height") from None
    out = system.flow(point, t)
    click.echo(f"{','.join(map(str, out.base))} {format_fraction(out.height)}")


@main.command()
@scheme_options
@set_options
@window_options
@click.option("--direction", type=click.Choice(["forward", "backward", "both"]), default=None)
@click.option("--reverse-coordinate", type=int, multiple=True, help="Reverse symbol order on coordinate n.")
@click.option("--weight", multiple=True, help="Density PREFIX=VALUE on a base cylinder, e.g. 0=3 or 0,1=2.")
@click.option("--control-ceiling", help="Override the conjugated ceiling (negative control).")
def conjugacy(direction, reverse_coordinate, weight, control_ceiling, **kw):
    """Return-set measure before and after a relabeling or reweighting."""
    cfg = _config(kw)
    scheme, spec = cfg.build_scheme(), cfg.build_ceiling()
    window = _window(kw, cfg.precision_cap)
    a0 = _target_set(kw, scheme)
    relabeling = Relabeling.reverse_coordinates(scheme, reverse_coordinate) if reverse_coordinate else None
    if control_ceiling and relabeling is None:
        relabeling = Relabeling.identity(scheme)
    weighting = None
    if weight:
        dens = {}
        try:
            for item in weight:
                key, val = item.split("=", 1)
                dens[tuple(int(v) for v in key.split(","))] = parse_fraction(val)
            depths = {len(k) for k in dens}
            if len(depths) != 1:
                raise ValueError("all weighted prefixes must have the same length")
            weighting = Weighting(depths.pop(), dens)
        except (ValueError, ZeroDivisionError) as exc:
            raise click.BadParameter(str(exc), param_hint="--weight") from None
    control = RunConfig(1, ceiling=control_ceiling).build_ceiling() if control_ceiling else None
    if relabeling is None and weighting is None:
        relabeling = Relabeling.identity(scheme)
    rep = conjugacy_consistency(scheme, spec, a0, window, relabeling=relabeling, weighting=weighting,
                                conjugate_ceiling=control, directions=direction)
    click.echo(f"original {format_fraction(rep.original_measure)}")
    if rep.conjugated_measure is not None:
        click.echo(f"conjugated {format_fraction(rep.conjugated_measure)}")
        click.echo(f"equal {str(rep.equal).lower()}")
    if rep.weighted_measure is not None:
        click.echo(f"weighted {format_fraction(rep.weighted_measure)}")
        click.echo(f"density_bound {format_fraction(rep.density_bound)}")
        click.echo(f"dominated {str(rep.dominated).lower()}")
    for note in rep.notes:
        click.echo(f"note: {note}")
    if not rep.ok:
        _fail("conjugacy check failed")


if __name__ == "__main__":
    main()
