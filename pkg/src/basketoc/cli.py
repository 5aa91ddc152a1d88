"""Command-line front end.

    basketoc toer --k 3 --p0 0.2 --n 20 --n1 10 --lambda 0.95 \\
        --weights cpp --a 1 --b 1 --interim postpred --fut 0.1 --eff 0.9

Every flag may also be given in a ``--config`` file of ``key = value``
lines; flags on the command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .calibration import InfeasibleError, adjust_lambda, get_scenarios, opt_design, weight_grid
from .design import DesignSpec, weight_curve
from .engine import InterimConfig, StageLayout, TrueScenario, evaluate
from .montecarlo import simulate_oc
from .special import QuadratureError

COMMANDS = (
    "toer", "pow", "ecd", "ess", "estim", "adjust-lambda",
    "scenarios", "opt-design", "plot-weights", "simulate",
)

EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4

DEFAULTS = {
    "shape1": 1.0, "shape2": 1.0, "weights": "cpp", "a": [1.0], "b": [1.0],
    "epsilon": [1.0], "tau": [0.0], "share_prior": False, "fut": 0.1, "eff": 0.9,
    "ppp_posterior": "individual", "alpha": 0.05, "prec_digits": 3,
    "replicates": 100_000, "seed": 1, "format": "table", "results": "group",
}


class ConfigError(ValueError):
    pass


def float_list(text: str) -> list[float]:
    """Comma separated numbers; ``lo:hi`` expands to the integers lo..hi."""
    out: list[float] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = (int(v) for v in part.split(":"))
            out.extend(range(lo, hi + 1))
        else:
            value = float(part)
            out.append(int(value) if value.is_integer() else value)
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=None)
    g = common.add_argument_group("design")
    g.add_argument("--config", help="file of key = value lines")
    g.add_argument("--k", type=int, help="number of baskets")
    g.add_argument("--shape1", type=float)
    g.add_argument("--shape2", type=float)
    g.add_argument("--p0", type=float, help="null response rate")
    g.add_argument("--n", type=int, help="(final) sample size per basket")
    g.add_argument("--n1", type=int, help="interim sample size per basket")
    g.add_argument("--lambda", dest="lam", type=float, help="posterior probability threshold")
    g = common.add_argument_group("weights")
    g.add_argument("--weights", choices=("cpp", "jsd"))
    g.add_argument("--a", type=float_list)
    g.add_argument("--b", type=float_list)
    g.add_argument("--epsilon", type=float_list)
    g.add_argument("--tau", type=float_list)
    g.add_argument("--share-prior", dest="share_prior", nargs="?", const=True, type=boolean,
                   help="borrow prior shapes too (Fujikawa's design)")
    g = common.add_argument_group("interim analysis")
    g.add_argument("--interim", choices=("posterior", "postpred", "none"))
    g.add_argument("--fut", type=float, help="futility boundary")
    g.add_argument("--eff", type=float, help="efficacy boundary")
    g.add_argument("--ppp-posterior", dest="ppp_posterior", choices=("individual", "shared"))
    g = common.add_argument_group("scenarios and calibration")
    g.add_argument("--p-true", dest="p_true", type=float_list, help="true response rates")
    g.add_argument("--p1", type=float, help="response rate of active baskets")
    g.add_argument("--alpha", type=float)
    g.add_argument("--prec-digits", dest="prec_digits", type=int)
    g.add_argument("--r1", type=int, help="responses in basket 1 (plot-weights)")
    g.add_argument("--results", choices=("group", "fwer"))
    g = common.add_argument_group("simulation and output")
    g.add_argument("--replicates", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="also write a CSV report here")
    g.add_argument("--svg", help="plot-weights: write an SVG chart here")
    g.add_argument("--format", choices=("table", "csv"))
    g.add_argument("--threads", type=int)

    parser = argparse.ArgumentParser(prog="basketoc", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def resolve(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        for key, raw in read_config_file(args.config).items():
            key = "lam" if key == "lambda" else key
            if key not in actions or key in ("config", "help"):
                raise ConfigError(f"unknown config key {key!r}")
            if getattr(args, key) is not None:
                continue  # command line wins
            action = actions[key]
            try:
                value = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
            if action.choices and value not in action.choices:
                raise ConfigError(f"bad value for {key}: {raw!r}")
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    return args


# --- building model objects ---------------------------------------------


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + ("lambda" if n == "lam" else n.replace("_", "-")) for n in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def make_design(args) -> DesignSpec:
    _require(args, "k", "p0")
    return DesignSpec(args.k, args.p0, args.shape1, args.shape2)


def make_layout(args) -> StageLayout:
    _require(args, "n")
    return StageLayout(args.n, args.n1)


def make_interim(args, layout) -> InterimConfig | None:
    kind = args.interim
    if not layout.two_stage:
        if kind not in (None, "none"):
            raise ConfigError("--interim needs --n1")
        return None
    if kind == "none":
        raise ConfigError("a two-stage layout (--n1) needs --interim posterior or postpred")
    return InterimConfig(kind or "postpred", args.fut, args.eff, args.ppp_posterior)


def make_configs(args):
    if args.weights == "cpp":
        return weight_grid("cpp", args.share_prior, a=args.a, b=args.b)
    return weight_grid("jsd", args.share_prior, epsilon=args.epsilon, tau=args.tau)


def make_config(args):
    configs = make_configs(args)
    if len(configs) != 1:
        raise ConfigError(f"{args.command} takes a single value per weight parameter")
    return configs[0]


def make_scenario(args, design) -> TrueScenario:
    if args.p_true is None:
        return TrueScenario.null(design)
    return TrueScenario(tuple(args.p_true))


# --- reports -------------------------------------------------------------


class Report:
    """Rows of named values plus family-level summary values."""

    def __init__(self, columns, rows, summary=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.summary = dict(summary or {})

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns + list(self.summary))
        extra = [_csv_value(v) for v in self.summary.values()]
        for row in self.rows or [[]]:
            writer.writerow([_csv_value(v) for v in row] + extra)
        return buf.getvalue()

    def table_text(self) -> str:
        lines = []
        if self.rows:
            cells = [self.columns] + [[_fmt(v) for v in row] for row in self.rows]
            widths = [max(len(r[j]) for r in cells) for j in range(len(self.columns))]
            for r in cells:
                lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip())
        for key, value in self.summary.items():
            lines.append(f"{key}: {_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".7g")
    return str(value)


def _csv_value(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _basket_rows(scenario, *columns):
    return [[j + 1, scenario.p[j], *(float(c[j]) for c in columns)] for j in range(len(scenario.p))]


def _oc(args):
    design = make_design(args)
    layout = make_layout(args)
    _require(args, "lam")
    interim = make_interim(args, layout)
    scenario = make_scenario(args, design)
    return scenario, evaluate(design, layout, args.lam, make_config(args), scenario, interim)


def cmd_toer(args) -> Report:
    scenario, oc = _oc(args)
    if args.results == "fwer":
        return Report([], [], {"fwer": oc.fwer})
    return Report(["basket", "p_true", "rejection_probability"],
                  _basket_rows(scenario, oc.rejection_prob), {"fwer": oc.fwer})


def cmd_pow(args) -> Report:
    _require(args, "p_true")
    scenario, oc = _oc(args)
    return Report(["basket", "p_true", "rejection_probability"],
                  _basket_rows(scenario, oc.rejection_prob), {"fwpower": oc.fwpower})


def cmd_ecd(args) -> Report:
    _, oc = _oc(args)
    return Report([], [], {"ecd": oc.ecd})


def cmd_ess(args) -> Report:
    scenario, oc = _oc(args)
    return Report(["basket", "p_true", "ess"], _basket_rows(scenario, oc.ess), {"ess_total": oc.ess_total})


def cmd_estim(args) -> Report:
    scenario, oc = _oc(args)
    return Report(["basket", "p_true", "mean_posterior_mean", "mse"],
                  _basket_rows(scenario, oc.mean_posterior_mean, oc.mse))


def cmd_adjust_lambda(args) -> Report:
    design = make_design(args)
    layout = make_layout(args)
    cal = adjust_lambda(design, layout, make_config(args), make_interim(args, layout),
                        args.alpha, args.prec_digits)
    return Report([], [], {"lambda": cal.lam, "fwer": cal.fwer})


def cmd_scenarios(args) -> Report:
    design = make_design(args)
    _require(args, "p1")
    sm = get_scenarios(design, args.p1)
    rows = [[j + 1, *map(float, sm.values[j])] for j in range(design.k)]
    return Report(["basket", *sm.labels], rows)


def cmd_opt_design(args) -> Report:
    design = make_design(args)
    layout = make_layout(args)
    _require(args, "p1")
    table = opt_design(design, layout, make_configs(args), get_scenarios(design, args.p1),
                       args.alpha, args.prec_digits, make_interim(args, layout), workers=args.threads)
    for config, err in table.failed:
        print(f"failed {config.params()}: {err}", file=sys.stderr)
    records = table.records()
    if not records:
        raise InfeasibleError("no grid point is feasible")
    columns = list(records[0])
    return Report(columns, [[rec[c] for c in columns] for rec in records])


def cmd_plot_weights(args) -> Report:
    design = make_design(args)
    _require(args, "n", "r1")
    names = ("a", "b") if args.weights == "cpp" else ("epsilon", "tau")
    rows, curves = [], []
    for config in make_configs(args):
        params = config.params()
        curve = weight_curve(args.n, args.r1, design, config)
        curves.append((", ".join(f"{k}={v}" for k, v in params.items()), curve))
        rows += [[params[names[0]], params[names[1]], r2, w] for r2, w in curve]
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(weights_svg(curves, args.n))
    return Report([*names, "r2", "weight"], rows)


def cmd_simulate(args) -> Report:
    design = make_design(args)
    layout = make_layout(args)
    _require(args, "lam")
    scenario = make_scenario(args, design)
    sim = simulate_oc(design, layout, args.lam, make_config(args), scenario,
                      make_interim(args, layout), args.replicates, args.seed, workers=args.threads)
    oc, se = sim.oc, sim.se
    rows = _basket_rows(scenario, oc.rejection_prob, se.rejection_prob, oc.ess, se.ess,
                        oc.mean_posterior_mean, se.mean_posterior_mean, oc.mse, se.mse)
    columns = ["basket", "p_true", "rejection_probability", "se_rejection_probability",
               "ess", "se_ess", "mean_posterior_mean", "se_mean_posterior_mean", "mse", "se_mse"]
    summary = {"fwer": oc.fwer, "se_fwer": se.fwer, "fwpower": oc.fwpower, "se_fwpower": se.fwpower,
               "ecd": oc.ecd, "se_ecd": se.ecd, "replicates": sim.replicates, "seed": sim.seed}
    return Report(columns, rows, summary)


def weights_svg(curves, n: int, width: int = 640, height: int = 400) -> str:
    """Static line chart: one polyline per parameter combination."""
    left, right, top, bottom = 60, 170, 20, 50
    pw, ph = width - left - right, height - top - bottom
    colours = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666", "#1f78b4"]

    def xy(r2, w):
        return left + pw * r2 / n, top + ph * (1 - w)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in range(0, n + 1, max(1, n // 10)):
        x, _ = xy(t, 0)
        out.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle">{t}</text>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        _, y = xy(0, t)
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">responses in basket 2</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">weight</text>')
    for j, (label, curve) in enumerate(curves):
        colour = colours[j % len(colours)]
        pts = " ".join("{:.2f},{:.2f}".format(*xy(r2, w)) for r2, w in curve)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 * (j + 1)
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" stroke="{colour}"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}">{label}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = resolve(parser, argv)
        report = HANDLERS[args.command](args)
    except InfeasibleError as exc:
        print(f"basketoc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, TypeError, QuadratureError, OSError) as exc:
        print(f"basketoc: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    text = report.csv_text() if args.format == "csv" else report.table_text()
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.csv_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
