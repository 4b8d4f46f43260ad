"""Command-line entry point: ``pieceable <command> [options]``.

Options may also come from a ``key=value`` file given with ``--config``
(keys use the long option names, dashes or underscores); flags on the
command line override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import _backend
from .codes import rm15, steane

log = logging.getLogger("pieceable")

CIRCUITS = ("A", "B")


def _circuit(name: str):
    from .pieceable import build_ccnot_A, build_ccnot_B
    if name == "A":
        return build_ccnot_A()
    if name == "B":
        return build_ccnot_B()
    raise SystemExit(f"unknown circuit {name!r} (choose A or B)")


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


def read_config(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SystemExit(f"{path}:{ln}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _header(args) -> dict:
    skip = {"func", "config"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["kernels"] = _backend.name
    return cfg


# -- verify ----------------------------------------------------------------

def cmd_verify(args) -> int:
    from .pieceable import (CNOT_ACTION, check_constant_stabilizers, check_stabilizer_preservation,
                            logical_action)
    from .verify import build_conversion, verify_conversion, verify_fault_tolerance

    failed = False
    for name in CIRCUITS:
        c = _circuit(name)
        print(f"== circuit {name} ({c.control_code.name} controls {c.target_code.name}): "
              f"{len(c.piece1)} + {len(c.piece2)} gates")
        print("constant stabilizers: " + ", ".join(s.text(False) for s in c.constant_stabilizers()))
        bad = check_stabilizer_preservation(c)
        print(f"stabilizer preservation: {'ok' if not bad else 'FAIL'}")
        for b in bad:
            print(f"  {b}")
        bad2 = check_constant_stabilizers(c)
        print(f"constant stabilizers commute with every gate: {'ok' if not bad2 else 'FAIL'}")
        for b in bad2[:20]:
            print(f"  {b}")
        act = logical_action(c)
        ok_act = act == CNOT_ACTION
        print("logical action: " + ", ".join(f"{k} -> {v}" for k, v in act.items()) + ("" if ok_act else "  FAIL"))
        failed |= bool(bad or bad2 or not ok_act)
        if not args.skip_faults:
            rep = verify_fault_tolerance(c, args.decoder)
            print(rep.summary())
            for v in rep.violations[:args.show]:
                print(f"  {v}")
            failed |= not rep.ok
    if not args.skip_faults:
        for direction in ("7->15", "15->7"):
            rep = verify_conversion(build_conversion(direction), args.decoder)
            print(rep.summary())
            for v in rep.violations[:args.show]:
                print(f"  {v}")
            failed |= not rep.ok
    print("verify: " + ("FAIL" if failed else "all checks passed"))
    return 1 if failed else 0


# -- data and training -----------------------------------------------------

def _train_config(args):
    from .nn import TrainConfig
    return TrainConfig(batch_size=args.batch_size, learning_rate=args.lr, lam=args.lam, epochs=args.epochs,
                       seed=args.seed, epsilon_schedule=tuple(_floats(args.eps)),
                       shots_per_epsilon=args.shots, heads=args.heads, target=args.target)


def cmd_gen_data(args) -> int:
    from .nn import generate_dataset, write_dataset
    cfg = _train_config(args)
    c = _circuit(args.circuit)
    ds = generate_dataset(c, cfg, args.seed, workers=args.workers, convention=args.depolarizing_convention)
    extra = " ".join(f"{k}={v}" for k, v in _header(args).items() if k != "out")
    write_dataset(ds, args.out, extra)
    print(f"wrote {len(ds)} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .decoders import extended_lookup_decoder
    from .nn import read_dataset, save_checkpoint, train_decoder
    ds = read_dataset(args.data)
    heads = "four" if len(ds.label_names) == 4 else "two"
    args.heads = heads
    cfg = _train_config(args)
    base = extended_lookup_decoder(_circuit(args.circuit)) if cfg.target == "residual" else None
    t0 = time.time()
    dec, hists = train_decoder(ds, cfg, base)
    for name, h in zip(ds.label_names, hists):
        print(f"{name}: train loss " + " ".join(f"{v:.4g}" for v in h.train_loss)
              + " | validation " + " ".join(f"{v:.4g}" for v in h.val_loss))
    save_checkpoint(args.out, dec, {"circuit": args.circuit, "data": str(args.data), "epochs": cfg.epochs,
                                    "seed": cfg.seed, "lr": cfg.learning_rate, "lam": cfg.lam,
                                    "batch_size": cfg.batch_size})
    print(f"trained {len(hists)} heads on {len(ds)} records in {time.time() - t0:.1f}s -> {args.out}")
    return 0


def _decoder(kind: str, c, model_path):
    from .decoders import extended_lookup_decoder, make_decoder
    if kind == "nn":
        if not model_path:
            raise SystemExit("--model is required for --decoder nn")
        from .nn import load_checkpoint
        dec, info = load_checkpoint(model_path, extended_lookup_decoder(c))
        return dec
    return make_decoder(kind, c)


# -- simulation and thresholds ---------------------------------------------

def cmd_simulate(args) -> int:
    from .harness import estimate_paired, write_results
    from .noise import NoiseParams
    rows = []
    circuits = CIRCUITS if args.circuit == "both" else (args.circuit,)
    for name in circuits:
        c = _circuit(name)
        model = args.model_b if name == "B" and args.model_b else args.model
        decoders = {d: _decoder(d, c, model) for d in args.decoder.split(",")}
        for i, e in enumerate(_floats(args.eps)):
            t0 = time.time()
            res = estimate_paired(c, decoders, NoiseParams(e, args.depolarizing_convention), args.shots, args.seed, i,
                                  args.workers, args.backend)
            for d, r in res.items():
                rows.append((name, d, r))
                lo, hi = r.ci()
                print(f"{name} {d:6s} eps={e:.3g} N={r.shots} failures={r.failures} rate={r.rate:.4g} "
                      f"[{lo:.3g}, {hi:.3g}] ({time.time() - t0:.1f}s)")
    write_results(args.out, rows, _header(args))
    return 0


def _load_points(paths, circuit, decoder):
    from .harness import read_results
    pts = []
    for p in paths:
        rows, _ = read_results(p)
        pts += [r for c, d, r in rows if c == circuit and d == decoder]
    if not pts:
        raise SystemExit(f"no results for circuit {circuit} decoder {decoder}")
    return sorted(pts, key=lambda r: r.epsilon)


def cmd_threshold(args) -> int:
    from .harness import threshold_from_points
    pts = _load_points(args.results, args.circuit, args.decoder)
    res = threshold_from_points(pts, args.circuit, args.decoder, (args.fit_min, args.fit_max), args.line)
    lines = res.lines() + [f"line={args.line}"]
    _emit(lines, args.out)
    _series(pts, [("fit", res.fit), ("pure", res.pure)], args.series)
    return 0


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text)


def _series(pts, fits, path):
    if not path:
        return
    grid = np.geomspace(min(p.epsilon for p in pts) / 10, max(p.epsilon for p in pts), 60)
    with open(path, "w") as fh:
        fh.write("kind,epsilon,value\n")
        for p in pts:
            fh.write(f"data,{p.epsilon!r},{p.rate!r}\n")
        for name, f in fits:
            for e in grid:
                fh.write(f"{name},{e!r},{float(f(e))!r}\n")
        for e in grid:
            fh.write(f"line,{e!r},{e!r}\n")


def cmd_swap_threshold(args) -> int:
    from .harness import REFERENCE, NoThreshold, fit_pure_quadratic, fit_quadratic, swap_pseudo_threshold
    lines = [f"decoder={args.decoder}", f"fit_window={args.fit_min:.3g}..{args.fit_max:.3g}"]
    fits = {}
    for name in CIRCUITS:
        pts = [p for p in _load_points(args.results, name, args.decoder) if args.fit_min <= p.epsilon <= args.fit_max]
        fits[name] = (fit_pure_quadratic(pts), fit_quadratic(pts))
    for sym in (False, True):
        for kind, k in (("", 0), ("_full", 1)):
            try:
                e = swap_pseudo_threshold(fits["A"][k], fits["B"][k], symmetric=sym)
                val = f"{e:.6g}"
            except NoThreshold:
                val = "none"
            lines.append(f"eps_star{kind}{'_symmetric' if sym else ''}={val}")
    ref = REFERENCE.get(("swap", args.decoder))
    if ref:
        lines.append(f"reference={ref:.3g}")
    _emit(lines, args.out)
    return 0


def cmd_report(args) -> int:
    from .harness import REFERENCE, read_results, threshold_from_points
    rows = []
    for p in args.results:
        rows += read_results(p)[0]
    keys = sorted({(c, d) for c, d, _ in rows})
    print(f"{'circuit':8s} {'decoder':8s} {'eps*':>10s} {'eps*(3-term)':>13s} {'slope':>6s} {'reference':>10s}")
    for c, d in keys:
        pts = sorted((r for cc, dd, r in rows if (cc, dd) == (c, d)), key=lambda r: r.epsilon)
        try:
            res = threshold_from_points(pts, c, d, (args.fit_min, args.fit_max))
        except ValueError as exc:
            print(f"{c:8s} {d:8s} fit failed: {exc}")
            continue
        ref = REFERENCE.get((c, d))

        def f(v):
            return "none" if v is None else f"{v:.3g}"
        print(f"{c:8s} {d:8s} {f(res.eps_star):>10s} {f(res.eps_star_full):>13s} {f(res.slope):>6s} {f(ref):>10s}")
    return 0


def cmd_codes(args) -> int:
    for code in (steane(), rm15()):
        print(code.check_matrix_text())
        print()
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pieceable", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key=value file with option defaults")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, circuit=True):
        if circuit:
            sp.add_argument("--circuit", default="A", help="A, B (simulate also accepts both)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
        sp.add_argument("--depolarizing-convention", choices=["three-quarter", "total-eps"],
                        default="three-quarter",
                        help="one-qubit depolarizing total: 3e/4 (three-quarter) or e (total-eps)")

    sp = sub.add_parser("verify", help="structural and exhaustive single-fault checks")
    sp.add_argument("--decoder", default="mwd", choices=["mwd", "lookup"])
    sp.add_argument("--skip-faults", action="store_true")
    sp.add_argument("--show", type=int, default=10, help="violations listed per check")
    sp.set_defaults(func=cmd_verify)

    def train_opts(sp):
        sp.add_argument("--eps", default="1e-4 2.2e-4 4.6e-4 1e-3 2.2e-3 4.6e-3 1e-2",
                        help="physical error rates for data generation")
        sp.add_argument("--shots", type=int, default=100000)
        sp.add_argument("--heads", choices=["two", "four"], default="four")
        sp.add_argument("--target", choices=["residual", "raw"], default="residual")
        sp.add_argument("--epochs", type=int, default=5)
        sp.add_argument("--lr", type=float, default=1e-4)
        sp.add_argument("--lam", type=float, default=1e-5, help="weight-norm penalty")
        sp.add_argument("--batch-size", type=int, default=30)

    sp = sub.add_parser("gen-data", help="simulate syndrome records for training")
    common(sp)
    train_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train", help="train the classifier heads on a dataset")
    common(sp)
    train_opts(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("simulate", help="Monte Carlo exRec failure rates")
    common(sp)
    sp.add_argument("--decoder", default="mwd", help="comma list of mwd, lookup, nn")
    sp.add_argument("--model", help="checkpoint for --decoder nn")
    sp.add_argument("--model-b", help="checkpoint for circuit B when --circuit both")
    sp.add_argument("--eps", default="1e-4 2e-4 3e-4 5e-4 1e-3 2e-3 3e-3")
    sp.add_argument("--shots", type=int, default=100000)
    sp.add_argument("--backend", choices=["frame", "tableau"], default="frame")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    def fit_opts(sp):
        sp.add_argument("--results", nargs="+", required=True, help="files written by simulate")
        sp.add_argument("--decoder", default="mwd")
        sp.add_argument("--fit-min", type=float, default=1e-4)
        sp.add_argument("--fit-max", type=float, default=1e-3)
        sp.add_argument("--out")

    sp = sub.add_parser("threshold", help="fit one circuit's rates and report its pseudo-threshold")
    sp.add_argument("--circuit", default="A")
    fit_opts(sp)
    sp.add_argument("--line", choices=["eps", "15/16"], default="eps")
    sp.add_argument("--series", help="write plot-ready data and fit curves here")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("swap-threshold", help="pseudo-threshold of the three-CNOT SWAP")
    fit_opts(sp)
    sp.set_defaults(func=cmd_swap_threshold)

    sp = sub.add_parser("report", help="table of thresholds for every (circuit, decoder) in results files")
    sp.add_argument("--results", nargs="+", required=True)
    sp.add_argument("--fit-min", type=float, default=1e-4)
    sp.add_argument("--fit-max", type=float, default=1e-3)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("codes", help="print the stabilizer generators")
    sp.set_defaults(func=cmd_codes)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config(known.config)
        # defaults live on the subparsers, so apply them there
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                flags = {a.dest for a in sp._actions if isinstance(a, argparse._StoreTrueAction)}
                valid = {a.dest for a in sp._actions}
                sp.set_defaults(**{k: (v.lower() in ("1", "true", "yes") if k in flags else v)
                                   for k, v in values.items() if k in valid})
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    for k in ("seed", "workers", "shots", "epochs", "batch_size", "show"):
        if hasattr(args, k) and isinstance(getattr(args, k), str):
            setattr(args, k, int(getattr(args, k)))
    for k in ("lr", "lam", "fit_min", "fit_max"):
        if hasattr(args, k) and isinstance(getattr(args, k), str):
            setattr(args, k, float(getattr(args, k)))
    if isinstance(getattr(args, "results", None), str):
        args.results = args.results.split()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
