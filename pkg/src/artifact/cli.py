"""Command-line entry point: `artifact <subcommand> ...`.

Exit codes: 0 success, 1 failed checks (verify), 2 usage error, 3 guard tripped."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .algebra import Dyadic, Metallic
from .substitution import GuardError, fibonacci, noble, parse_spec, period_doubling, spec_to_dict


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits, lossless for doubles."""
    return f"{float(x):.17g}"


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": float(fmt(x.real)), "im": float(fmt(x.imag))}
    if isinstance(x, (float, np.floating)):
        return float(fmt(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise UsageError(f"cannot parse number list {text!r}") from e


def _weights(text: str | None):
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError("--weights needs two values u_a,u_b")
    try:
        return tuple(complex(t.strip().replace("i", "j")) for t in parts)
    except ValueError as e:
        raise UsageError(f"cannot parse weights {text!r}") from e


def _spec(args):
    if getattr(args, "spec", None):
        try:
            text = open(args.spec).read() if args.spec.endswith(".json") else args.spec
            return parse_spec(text)
        except (OSError, ValueError, KeyError) as e:
            raise UsageError(str(e)) from e
    fam = args.family
    try:
        if fam == "fibonacci":
            return fibonacci(args.p if args.p is not None else 0.5)
        if fam == "perioddoubling":
            return period_doubling(args.p if args.p is not None else 0.5)
        if fam == "noble":
            m = args.m or 2
            probs = _floats(args.probs) if args.probs else [1.0 / (m + 1)] * (m + 1)
            return noble(m, probs)
    except ValueError as e:
        raise UsageError(str(e)) from e
    raise UsageError(f"unknown family {fam!r}")


def _family_args(sp, families=("fibonacci", "noble", "perioddoubling")):
    sp.add_argument("--family", choices=families, default=families[0])
    sp.add_argument("--p", type=float, help="branch probability p (fibonacci, perioddoubling)")
    sp.add_argument("--m", type=int, help="noble means parameter")
    sp.add_argument("--probs", help="noble means branch probabilities p_0,...,p_m")
    sp.add_argument("--spec", help="builtin spec string or JSON config (inline or .json file)")


# ---------------------------------------------------------------- commands

def cmd_generate(args):
    from .geometry import realize
    from .rng import stream
    from .substitution import exact_patches, sample_word

    spec = _spec(args)
    fam = "perioddoubling" if spec.family == "perioddoubling" else spec.m
    if args.exact:
        pats = exact_patches(spec, args.level, args.seed_letter)
        _emit(json.dumps({"spec": spec_to_dict(spec), "level": args.level,
                          "patches": [{"word": w, "prob": float(fmt(p))} for w, p in pats]}, indent=1) + "\n",
              args.out)
        return 0
    if args.seed is None:
        raise UsageError("--seed is required for random generation")
    word = sample_word(spec, args.level, stream(args.seed), args.seed_letter)
    _emit(realize(word, fam).to_csv(), args.out)
    return 0


def _k_index_str(k) -> str:
    if isinstance(k, Metallic):
        return f"({k.u}+{k.v}*lambda_{k.m})/sqrt({k.m * k.m + 4})"
    return f"{k.num}/2^{k.r}"


def cmd_spectrum(args):
    from .diffraction import spectrum_enumerate

    spec = _spec(args)
    bound = args.rmax if spec.family == "perioddoubling" else args.height
    w = _weights(args.weights)
    S = spectrum_enumerate(spec, bound, args.cutoff, w, args.deform, (args.kmin, args.kmax))
    peaks = [(k.values()[0], _k_index_str(k), I) for k, I in S.pure_point]
    if args.out and args.out.endswith(".csv"):
        _emit(_csv(["k_float", "k_index", "intensity"], peaks), args.out)
    else:
        doc = {"family": S.family, "params": S.params,
               "peaks": [{"k_float": k, "k_index": s, "intensity": I} for k, s, I in peaks],
               "ac": {"kind": S.ac_kind, "truncation_tol": S.truncation_tol}}
        _emit(json.dumps(_jsonable(doc), indent=1) + "\n", args.out)
    return 0


def cmd_acdensity(args):
    from .diffraction import ac_density

    spec = _spec(args)
    if args.step <= 0 or args.k1 < args.k0:
        raise UsageError("need step > 0 and k1 >= k0")
    n = int(np.floor((args.k1 - args.k0) / args.step + 1e-9)) + 1
    ks = args.k0 + args.step * np.arange(n)
    phi = ac_density(spec, ks, _weights(args.weights), args.deform)
    _emit(_csv(["k", "phi"], zip(ks, phi)), args.out)
    return 0


def _kgrid(text: str) -> np.ndarray:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("--kgrid k0:k1:count")
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.array(_floats(text))


def cmd_mc_diffract(args):
    from .diffraction import mc_sample

    spec = _spec(args)
    ks = _kgrid(args.kgrid)
    st = mc_sample(spec, args.level, ks, args.samples, args.seed, _weights(args.weights), args.deform)
    rows = zip(st.k, st.mean.real, st.mean.imag, st.var, st.bragg_est)
    _emit(_csv(["k", "mean_re", "mean_im", "var", "bragg_est"], rows), args.out)
    return 0


def cmd_occupation(args):
    from .geometry import lambda_nonneg
    from .occupation import g_iterate, g_limit, h_eval, pd_limit_table

    spec = _spec(args)
    if spec.family == "perioddoubling":
        tab = g_iterate(spec, args.level)
        xs = tab.positions()
        lim = pd_limit_table(spec.params["p"], len(xs))
        rows = [(x, tab.table[x][0], tab.table[x][1], lim[i], 1.0 - lim[i]) for i, x in enumerate(xs)]
        _emit(_csv(["x", "g_a", "g_b", "h_a", "h_b"], rows), args.out)
        return 0
    m = spec.m
    if args.limit:
        u, v = lambda_nonneg(m, args.level)
        keys = list(zip(u.tolist(), v.tolist()))
        g = g_limit(spec, keys)
    else:
        tab = g_iterate(spec, args.level)
        keys = tab.positions()
        g = tab.table
    from .algebra import lam, lam_conj
    u = np.array([k[0] for k in keys], dtype=float)
    v = np.array([k[1] for k in keys], dtype=float)
    stars = u + v * lam_conj(m)
    ha = h_eval(spec, stars, "a")
    hb = h_eval(spec, stars, "b")
    rows = [(a + b * lam(m), int(a), int(b), g[k][0], g[k][1], x, y)
            for (a, b), k, x, y in zip(zip(u, v), keys, ha, hb)]
    _emit(_csv(["x_float", "x_u", "x_v", "g_a", "g_b", "h_a", "h_b"], rows), args.out)
    return 0


def cmd_window(args):
    from .windows import chaos_diagnostics, chaos_game, ifs_fixed_point

    res = ifs_fixed_point(args.m, args.tol)
    if args.chaos:
        if args.seed is None:
            raise UsageError("--seed is required with --chaos")
        probs = _floats(args.probs) if args.probs else None
        tr = chaos_game(args.m, probs, args.chaos, args.seed)
        letters = np.array(["a", "b"])[tr.letters]
        _emit(_csv(["step", "letter", "y"], zip(range(len(tr.y)), letters, tr.y)), args.out)
        diag = chaos_diagnostics(tr, res.Wa, res.Wb, tol=args.tol)
        sys.stderr.write(json.dumps(_jsonable(diag)) + "\n")
        return 0

    def ivs(U):
        return [{"lo": {"u": lo.u, "v": lo.v, "float": float(fmt(lo))},
                 "hi": {"u": hi.u, "v": hi.v, "float": float(fmt(hi))}} for lo, hi in U.intervals]
    doc = {"m": args.m, "tol": args.tol, "iterations": res.iterations,
           "W_a": ivs(res.Wa), "W_b": ivs(res.Wb), "distances": [float(fmt(d)) for d in res.distances]}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def cmd_entropy(args):
    from .entropy import count_exact_words, entropy_estimate, entropy_exact

    doc = {"family": args.family}
    if not args.exact and args.estimate is None:
        raise UsageError("give --exact and/or --estimate n")
    if args.exact:
        doc["exact"] = entropy_exact(args.family)
        if args.family == "perioddoubling":
            doc["exact_word_counts"] = {r: str(count_exact_words(r)) for r in range(0, 9)}
    if args.estimate is not None:
        spec = fibonacci(0.5) if args.family == "fibonacci" else (
            period_doubling(0.5) if args.family == "perioddoubling" else noble(args.m or 2, [1.0 / ((args.m or 2) + 1)] * ((args.m or 2) + 1)))
        est = {}
        for n in range(1, args.estimate + 1):
            s, c = entropy_estimate(spec, n)
            est[n] = {"estimate": s, "words": c}
        doc["estimates"] = est
    _emit(json.dumps(_jsonable(doc), indent=1) + "\n", args.out)
    return 0


def cmd_autocorr(args):
    from .autocorr import WeightedComb, autocorrelation, key_value
    from .geometry import LabeledPointSet

    try:
        text = open(args.input).read()
    except OSError as e:
        raise UsageError(str(e)) from e
    m = None if args.family == "perioddoubling" else args.m
    try:
        ps = LabeledPointSet.from_csv(text, m)
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad point-set CSV: {e}") from e
    window = tuple(_floats(args.window)) if args.window else None
    comb = WeightedComb.from_point_set(ps, _weights(args.weights) or (1.0, 1.0), window)
    g = autocorrelation(comb, letters=True, maxz=args.maxz)
    keys = sorted(g, key=lambda k: key_value(k, m)[0])
    rows = []
    for k in keys:
        c = g[k]
        rows.append((key_value(k, m)[0], c["total"].real, c["total"].imag,
                     c["aa"].real, c["ab"].real, c["ba"].real, c["bb"].real))
    _emit(_csv(["z", "re", "im", "eta_aa", "eta_ab", "eta_ba", "eta_bb"], rows), args.out)
    return 0


def cmd_verify(args):
    from .verify import run_suite

    only = set(args.only.split(",")) if args.only else None
    results = run_suite(args.family, args.p, only)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Spectra of random substitution tilings.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("generate", help="sample or enumerate inflation patches")
    _family_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--seed-letter", default=None)
    sp.add_argument("--exact", action="store_true", help="enumerate all realisations (JSON)")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("spectrum", help="Bragg peaks and AC metadata")
    _family_args(sp)
    sp.add_argument("--height", type=int, default=8)
    sp.add_argument("--rmax", type=int, default=10)
    sp.add_argument("--cutoff", type=float, default=1e-12)
    sp.add_argument("--weights")
    sp.add_argument("--deform", type=float, default=None)
    sp.add_argument("--kmin", type=float, default=-4.0)
    sp.add_argument("--kmax", type=float, default=4.0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("acdensity", help="absolutely continuous density on a grid")
    _family_args(sp, ("fibonacci", "perioddoubling"))
    sp.add_argument("--k0", type=float, default=0.0)
    sp.add_argument("--k1", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=0.01)
    sp.add_argument("--weights")
    sp.add_argument("--deform", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_acdensity)

    sp = sub.add_parser("mc-diffract", help="Monte Carlo exponential-sum statistics")
    _family_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--samples", type=int, default=400)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--kgrid", required=True, help="k0:k1:count or comma list")
    sp.add_argument("--weights")
    sp.add_argument("--deform", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_mc_diffract)

    sp = sub.add_parser("occupation", help="occupation probabilities and weight functions")
    _family_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--limit", action="store_true", help="limit g on Lambda^(level) instead of g^(level)")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_occupation)

    sp = sub.add_parser("window", help="covering-window IFS and chaos game")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--chaos", type=int, help="number of chaos-game steps")
    sp.add_argument("--probs", help="branch probabilities for the chaos game")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_window)

    sp = sub.add_parser("entropy", help="topological entropy")
    sp.add_argument("--family", choices=("fibonacci", "perioddoubling", "noble"), default="fibonacci")
    sp.add_argument("--m", type=int)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--estimate", type=int, help="legal-word estimates for n = 1..N")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_entropy)

    sp = sub.add_parser("autocorr", help="autocorrelation of a point-set CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--family", choices=("metallic", "perioddoubling"), default="metallic")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--window", help="lo,hi of the averaging window")
    sp.add_argument("--weights")
    sp.add_argument("--letters", action="store_true", help="per letter-pair columns (always written)")
    sp.add_argument("--maxz", type=float, default=5.0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_autocorr)

    sp = sub.add_parser("verify", help="run the acceptance checks")
    sp.add_argument("--family", choices=("all", "fibonacci", "noble", "perioddoubling"), default="all")
    sp.add_argument("--p", type=float)
    sp.add_argument("--only", help="comma-separated check ids")
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except UsageError as e:
        sys.stderr.write(f"artifact: error: {e}\n")
        return 2
    except GuardError as e:
        sys.stderr.write(f"artifact: guard tripped: {e}\n")
        return 3
    except ValueError as e:  # invalid parameter values, frequencies outside the module
        sys.stderr.write(f"artifact: error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
