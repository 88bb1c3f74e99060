#!/usr/bin/env python3
"""Generate the synthetic illustrative dataset under data/illustrative/.

The original participant-level data of the four TDD replications are not
available, so this script builds a stand-in whose reference summaries are
reproduced exactly to the printed precision:

  * per-experiment covariate means and sds (1..4 ordinal scale)
  * per-arm n, mean, sd, median and the paired correlation of QLTY
  * per-experiment paired estimates, CIs and p-values (df = 2n - 2)

Participant covariates are then permuted within experiments (which leaves the
per-experiment covariate summaries untouched) so that naive treatment x
covariate interactions of a REML mixed model land close to the reference
values. The REML fitter used for that search is implemented here with numpy,
independently of the C++ library.

Run from the repository root:  python3 tools/calibrate_illustrative_data.py
For a fixed --seed the outcome data are reproducible; the covariate search can
end on a different permutation if the BLAS backend rounds differently.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, stats

LO, HI = 0.0, 100.0
DECIMALS = 4


@dataclass
class ArmTarget:
    mean: float
    sd: float
    median: float


@dataclass
class ExperimentTarget:
    id: str
    n: int
    control: ArmTarget
    treatment: ArmTarget
    corr: float
    estimate: float
    ci: tuple[float, float]
    p: float | None  # None when printed as "<0.001"
    subject_type: str


TARGETS = [
    ExperimentTarget("F-Secure H", 6, ArmTarget(30.71, 36.58, 24.16), ArmTarget(40.23, 33.43, 35.34),
                     0.59, 9.52, (-19.58, 38.62), 0.483, "professional"),
    ExperimentTarget("F-Secure K", 11, ArmTarget(22.17, 20.44, 17.98), ArmTarget(35.42, 35.40, 22.41),
                     0.42, 13.26, (-7.26, 33.77), 0.193, "professional"),
    ExperimentTarget("F-Secure O", 7, ArmTarget(16.05, 20.81, 7.87), ArmTarget(68.97, 31.53, 81.03),
                     0.52, 52.91, (30.44, 75.39), None, "professional"),
    # UPV: the treatment arm and the paired statistics refer to the 29 complete
    # pairs; the control summary refers to all 31 control observations.
    ExperimentTarget("UPV", 29, ArmTarget(33.38, 39.79, 6.74), ArmTarget(77.16, 21.04, 83.93),
                     0.47, 42.31, (29.02, 55.62), None, "student"),
]
UPV_CONTROL_ONLY = 2
UPV_NO_DATA = 2
UPV_WITH_COVARIATES = 25

COVARIATE_TARGETS = {  # experiment -> [(mean, sd)] for programming, java, unit_testing, junit
    "F-Secure H": [(3.67, 0.52), (2.33, 1.21), (2.17, 0.98), (2.17, 1.17)],
    "F-Secure K": [(2.91, 0.70), (1.82, 0.87), (1.64, 0.50), (1.27, 0.47)],
    "F-Secure O": [(3.29, 0.76), (2.71, 1.11), (2.71, 0.76), (2.00, 0.82)],
    "UPV": [(2.36, 0.57), (1.88, 0.60), (1.04, 0.20), (1.00, 0.00)],
}
COVARIATES = ["programming", "java", "unit_testing", "junit"]
INTERACTION_TARGETS = {"programming": 15.76, "java": 3.85, "unit_testing": 11.79, "junit": 11.07}


def rounds_to(value: float, printed: float, decimals: int = 2) -> bool:
    return abs(value - printed) <= 0.5 * 10 ** (-decimals) + 1e-12


def paired_summary(n: int, mc: float, mt: float, sc: float, st: float, r: float):
    sd_diff = math.sqrt(max(sc * sc + st * st - 2 * r * sc * st, 1e-12))
    df = 2 * n - 2
    se = sd_diff / math.sqrt(n)
    half = stats.t.ppf(0.975, df) * se
    est = mt - mc
    p = 2 * stats.t.sf(abs(est / se), df)
    return est, (est - half, est + half), p


# ---------------------------------------------------------------------------
# Step 1: unrounded moments consistent with every printed number


def solve_moments(t: ExperimentTarget, n_extra: int = 0):
    """Unrounded (mc, mt, sc, st, r) for the complete pairs, plus the values of
    the control-only participants (empty unless n_extra > 0).

    With control-only participants the full control arm has its own printed
    mean and sd; the extras then follow from the sum and sum of squares left
    over by the complete pairs. Two extras are placed at a fixed spread
    (sum of squares = 0.6 * sum^2) so both stay non-negative and distinct.
    """
    # Halfway between the CI midpoint and the printed estimate keeps both
    # within rounding distance.
    est_mid = 0.5 * (0.5 * (t.ci[0] + t.ci[1]) + t.estimate)
    n = t.n
    n_all = n + n_extra

    def unpack(v):
        if n_extra:
            mc, mt, sc, st, r, ma, sa = v
        else:
            mc, mt, sc, st, r = v
            ma, sa = mc, sc
        return mc, mt, sc, st, r, ma, sa

    def resid(v):
        mc, mt, sc, st, r, ma, sa = unpack(v)
        est, ci, p = paired_summary(n, mc, mt, sc, st, r)
        out = [
            (ma - t.control.mean) / 0.005,
            (sa - t.control.sd) / 0.005,
            (mt - t.treatment.mean) / 0.005,
            (st - t.treatment.sd) / 0.005,
            (r - t.corr) / 0.005,
            (est - est_mid) / 0.005,
            (ci[0] - t.ci[0]) / 0.005,
            (ci[1] - t.ci[1]) / 0.005,
        ]
        if t.p is not None:
            out.append((p - t.p) / 0.0025)
        if n_extra:
            s1 = n_all * ma - n * mc
            s2 = (n_all - 1) * sa**2 + n_all * ma**2 - ((n - 1) * sc**2 + n * mc**2)
            out.append((s2 - 0.6 * s1**2) / 0.5)
        return out

    x0 = [t.treatment.mean - est_mid, t.treatment.mean, t.control.sd, t.treatment.sd, t.corr]
    if n_extra:
        x0 += [t.control.mean, t.control.sd]
    sol = optimize.least_squares(resid, x0, xtol=1e-15, ftol=1e-15)
    if n_extra:
        # The soft fit can leave a printed value outside its rounding band;
        # re-solve with every band as a hard constraint.
        def bands(v):
            mc, mt, sc, st, r, ma, sa = unpack(v)
            est, ci, _ = paired_summary(n, mc, mt, sc, st, r)
            s1 = n_all * ma - n * mc
            s2 = (n_all - 1) * sa**2 + n_all * ma**2 - ((n - 1) * sc**2 + n * mc**2)
            return np.array([
                0.0048 - abs(ma - t.control.mean), 0.0048 - abs(sa - t.control.sd),
                0.0048 - abs(mt - t.treatment.mean), 0.0048 - abs(st - t.treatment.sd),
                0.0049 - abs(r - t.corr), 0.0095 - abs(est - t.estimate),
                0.019 - abs(ci[0] - t.ci[0]), 0.019 - abs(ci[1] - t.ci[1]),
                s2 - 0.52 * s1**2, 0.995 * s1**2 - s2])

        res = optimize.minimize(lambda v: -np.min(bands(v)), sol.x, method="SLSQP",
                                constraints=[{"type": "ineq", "fun": bands}],
                                options={"maxiter": 500, "ftol": 1e-12})
        assert np.all(bands(res.x) >= -1e-9), bands(res.x)
        sol = res
    mc, mt, sc, st, r, ma, sa = unpack(sol.x)
    extras = []
    if n_extra:
        assert n_extra == 2
        s1 = n_all * ma - n * mc
        s2 = (n_all - 1) * sa**2 + n_all * ma**2 - ((n - 1) * sc**2 + n * mc**2)
        disc = math.sqrt(max(2 * s2 - s1**2, 0.0))
        extras = [0.5 * (s1 - disc), 0.5 * (s1 + disc)]
        assert min(extras) >= LO and max(extras) <= HI, extras
    return (mc, mt, sc, st, r), extras


# ---------------------------------------------------------------------------
# Step 2: values with exact moments, medians and correlation


def beta_start(rng, n, mean, sd):
    """Jittered quantiles of a beta distribution on [LO, HI] with the given
    moments; a natural, well-spread starting configuration."""
    m = (mean - LO) / (HI - LO)
    v = (sd / (HI - LO)) ** 2
    nu = max(m * (1 - m) / v - 1, 0.05)
    u = (np.arange(n) + rng.uniform(0.2, 0.8, n)) / n
    return np.sort(LO + (HI - LO) * stats.beta.ppf(u, m * nu, (1 - m) * nu))


def solve_paired(rng, n, mc, sc, mt, st, r, med_c, med_t, extras):
    """Sorted complete-pair control and treatment values with a fixed pairing.

    The control median refers to the full control arm (complete pairs plus
    `extras`), so the index of the median among the complete-pair values
    shifts by the number of extras below it.
    """
    n_c = n + len(extras)
    below = sum(1 for e in extras if e < med_c)
    if n_c % 2 == 1:
        med_c_idx = [(n_c - 1) // 2 - below]
    else:
        med_c_idx = [n_c // 2 - 1 - below, n_c // 2 - below]
    med_t_idx = [(n - 1) // 2] if n % 2 == 1 else [n // 2 - 1, n // 2]

    for attempt in range(500):
        z = rng.multivariate_normal([0, 0], [[1, r], [r, 1]], size=n)
        rank_c = np.argsort(np.argsort(z[:, 0]))
        rank_t = np.argsort(np.argsort(z[:, 1]))
        c0 = beta_start(rng, n, mc, sc)
        t0 = beta_start(rng, n, mt, st)
        v0 = np.concatenate([c0, t0])

        def split(v):
            return v[:n][rank_c], v[n:][rank_t]

        cons = [
            {"type": "eq", "fun": lambda v: np.mean(v[:n]) - mc},
            {"type": "eq", "fun": lambda v: np.std(v[:n], ddof=1) - sc},
            {"type": "eq", "fun": lambda v: np.mean(v[n:]) - mt},
            {"type": "eq", "fun": lambda v: np.std(v[n:], ddof=1) - st},
            {"type": "eq", "fun": lambda v: np.corrcoef(*split(v))[0, 1] - r},
            {"type": "eq", "fun": lambda v: np.mean(v[:n][med_c_idx]) - med_c},
            {"type": "eq", "fun": lambda v: np.mean(v[n:][med_t_idx]) - med_t},
            # Sortedness pins the median positions.
            {"type": "ineq", "fun": lambda v: np.diff(v[:n]) - 0.01},
            {"type": "ineq", "fun": lambda v: np.diff(v[n:]) - 0.01},
        ]
        sol = optimize.minimize(lambda v: 1e-4 * np.sum((v - v0) ** 2), v0, method="SLSQP",
                                constraints=cons, bounds=[(LO, HI)] * (2 * n),
                                options={"maxiter": 3000, "ftol": 1e-14})
        if not sol.success:
            continue
        v = np.round(sol.x, DECIMALS)
        cp, tp = split(v)
        full_c = np.concatenate([cp, np.round(extras, DECIMALS)])
        checks = [
            abs(np.mean(cp) - mc) < 2e-4,
            abs(np.std(cp, ddof=1) - sc) < 2e-4,
            abs(np.mean(tp) - mt) < 2e-4,
            abs(np.std(tp, ddof=1) - st) < 2e-4,
            abs(np.corrcoef(cp, tp)[0, 1] - r) < 2e-5,
            abs(np.median(full_c) - med_c) < 1e-3,
            abs(np.median(tp) - med_t) < 1e-3,
        ]
        if all(checks):
            return cp, tp
    raise RuntimeError("could not solve paired values")


# ---------------------------------------------------------------------------
# Step 3: covariate multisets


def covariate_multisets(n, mean, sd):
    """All count vectors over {1,2,3,4} whose mean/sd round to the printed values."""
    found = []
    for a in range(n + 1):
        for b in range(n + 1 - a):
            for c in range(n + 1 - a - b):
                d = n - a - b - c
                vals = np.array([1] * a + [2] * b + [3] * c + [4] * d, float)
                m = vals.mean()
                s = vals.std(ddof=1) if n > 1 else 0.0
                if rounds_to(m, mean) and rounds_to(s, sd):
                    found.append(vals)
    return found


# ---------------------------------------------------------------------------
# Step 4: profiled REML oracle (random experiment intercept + slope, random
# participant intercept)


class RemlModel:
    def __init__(self, y, treat, X, exp_idx, part_idx):
        self.y = y
        self.X = X
        self.n, self.p = X.shape
        self.blocks = []
        for j in np.unique(exp_idx):
            rows = np.where(exp_idx == j)[0]
            Z = np.column_stack([np.ones(len(rows)), treat[rows]])
            parts = part_idx[rows]
            P = (parts[:, None] == np.unique(parts)[None, :]).astype(float)
            self.blocks.append((rows, Z, P))

    def _parts(self, theta):
        l11, l21, l22, lg = theta
        L = np.array([[math.exp(l11), 0.0], [l21, math.exp(l22)]])
        return L @ L.T, math.exp(2 * lg)

    def criterion(self, theta, full=False):
        psi, gam = self._parts(theta)
        logdet = 0.0
        XtHX = np.zeros((self.p, self.p))
        XtHy = np.zeros(self.p)
        yHy = 0.0
        cache = []
        for rows, Z, P in self.blocks:
            H = Z @ psi @ Z.T + gam * P @ P.T + np.eye(len(rows))
            cf = np.linalg.cholesky(H)
            logdet += 2 * np.sum(np.log(np.diag(cf)))
            Xi = np.linalg.solve(cf, self.X[rows])
            yi = np.linalg.solve(cf, self.y[rows])
            XtHX += Xi.T @ Xi
            XtHy += Xi.T @ yi
            yHy += yi @ yi
            cache.append((Xi, yi))
        cx = np.linalg.cholesky(XtHX)
        beta = np.linalg.solve(XtHX, XtHy)
        rss = yHy - XtHy @ beta
        dfr = self.n - self.p
        s2 = rss / dfr
        crit = logdet + 2 * np.sum(np.log(np.diag(cx))) + dfr * (1 + math.log(2 * math.pi * s2))
        if full:
            cov = s2 * np.linalg.inv(XtHX)
            return crit, beta, cov, s2, psi * s2, gam * s2
        return crit

    def fit(self, start=None):
        if start is not None:
            starts = [start]
        else:
            starts = [np.array([0.0, 0.0, 0.0, 0.0]), np.array([-1.0, 0.0, -0.5, -0.5])]
        best = None
        for s in starts:
            res = optimize.minimize(self.criterion, s, method="Nelder-Mead",
                                    options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
            res = optimize.minimize(self.criterion, res.x, method="Nelder-Mead",
                                    options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": 4000})
            if best is None or res.fun < best.fun:
                best = res
        crit, beta, cov, s2, psi, sp2 = self.criterion(best.x, full=True)
        return dict(theta=best.x, crit=crit, beta=beta, cov=cov, residual=s2, psi=psi,
                    participant=sp2)


def long_rows(raw, keep=None):
    y, tr, ex, pa, keys = [], [], [], [], []
    exp_ids = {}
    part_ids = {}
    for (e, p, arm, v) in raw:
        if v is None or (keep is not None and (e, p) not in keep):
            continue
        y.append(v)
        tr.append(1.0 if arm == "TDD" else 0.0)
        ex.append(exp_ids.setdefault(e, len(exp_ids)))
        pa.append(part_ids.setdefault((e, p), len(part_ids)))
        keys.append((e, p))
    return (np.array(y), np.array(tr), np.array(ex), np.array(pa), keys)


def naive_interaction(raw, cov_rows, name, start=None):
    keep = {(r["experiment_id"], r["participant_id"]) for r in cov_rows}
    lookup = {(r["experiment_id"], r["participant_id"]): r[name] for r in cov_rows}
    y, tr, ex, pa, keys = long_rows(raw, keep)
    x = np.array([lookup[k] for k in keys], float)
    X = np.column_stack([np.ones_like(y), tr, x, tr * x])
    fit = RemlModel(y, tr, X, ex, pa).fit(start)
    est = fit["beta"][3]
    se = math.sqrt(fit["cov"][3, 3])
    p = 2 * stats.norm.sf(abs(est / se))
    return est, se, p, fit


# ---------------------------------------------------------------------------


def build(seed: int, out_dir: Path, search_iters: int):
    rng = np.random.default_rng(seed)
    raw = []  # (experiment, participant, "ITL"/"TDD", value or None)
    summaries = []
    participants = {}

    for t in TARGETS:
        n_pairs = t.n
        n_extra = UPV_CONTROL_ONLY if t.id == "UPV" else 0
        (mc, mt, sc, st, r), extras = solve_moments(t, n_extra)
        est, ci, p = paired_summary(n_pairs, mc, mt, sc, st, r)
        assert rounds_to(mt, t.treatment.mean) and rounds_to(st, t.treatment.sd), t.id
        assert rounds_to(r, t.corr), (t.id, r)
        assert abs(est - t.estimate) <= 0.01, (t.id, est)
        assert abs(ci[0] - t.ci[0]) <= 0.019 and abs(ci[1] - t.ci[1]) <= 0.019, (t.id, ci)
        if t.p is not None:
            assert abs(p - t.p) <= 0.001, (t.id, p)
        else:
            assert p < 0.001
        if not n_extra:
            assert rounds_to(mc, t.control.mean) and rounds_to(sc, t.control.sd), t.id
        cp, tp = solve_paired(rng, n_pairs, mc, sc, mt, st, r, t.control.median,
                              t.treatment.median, extras)
        extras = [round(e, DECIMALS) for e in extras]

        pids = []
        order = rng.permutation(n_pairs)
        idx = 1
        for i in order:
            pid = f"{t.id.split()[-1][0]}{idx:02d}"
            pids.append(pid)
            raw.append((t.id, pid, "ITL", float(cp[i])))
            raw.append((t.id, pid, "TDD", float(tp[i])))
            idx += 1
        for v in extras:
            pid = f"{t.id.split()[-1][0]}{idx:02d}"
            raw.append((t.id, pid, "ITL", float(v)))
            raw.append((t.id, pid, "TDD", None))
            idx += 1
        if t.id == "UPV":
            for _ in range(UPV_NO_DATA):
                pid = f"U{idx:02d}"
                raw.append((t.id, pid, "ITL", None))
                raw.append((t.id, pid, "TDD", None))
                idx += 1
        participants[t.id] = pids  # complete-pair participants, covariate candidates
        n_c = n_pairs + len(extras)
        summaries.append(dict(experiment_id=t.id, n_control=n_c, n_treatment=n_pairs,
                              mean_control=t.control.mean, sd_control=t.control.sd,
                              mean_treatment=t.treatment.mean, sd_treatment=t.treatment.sd,
                              corr=t.corr, design="within"))

    # Re-check every printed number from the rounded raw values.
    for t in TARGETS:
        rows = [r for r in raw if r[0] == t.id]
        c_all = np.array([v for (_, _, a, v) in rows if a == "ITL" and v is not None])
        t_all = np.array([v for (_, _, a, v) in rows if a == "TDD" and v is not None])
        pairs = {}
        for (_, p, a, v) in rows:
            pairs.setdefault(p, {})[a] = v
        cp = np.array([d["ITL"] for d in pairs.values() if d.get("ITL") is not None and d.get("TDD") is not None])
        tp = np.array([d["TDD"] for d in pairs.values() if d.get("ITL") is not None and d.get("TDD") is not None])
        for arr, tgt in ((c_all, t.control), (t_all, t.treatment)):
            assert rounds_to(arr.mean(), tgt.mean), (t.id, arr.mean(), tgt.mean)
            assert rounds_to(arr.std(ddof=1), tgt.sd), (t.id, arr.std(ddof=1), tgt.sd)
            assert rounds_to(np.median(arr), tgt.median), (t.id, np.median(arr), tgt.median)
        assert rounds_to(np.corrcoef(cp, tp)[0, 1], t.corr)
        d = tp - cp
        n = len(d)
        se = d.std(ddof=1) / math.sqrt(n)
        half = stats.t.ppf(0.975, 2 * n - 2) * se
        assert abs(d.mean() - t.estimate) <= 0.01, (t.id, d.mean())
        assert abs(d.mean() - half - t.ci[0]) <= 0.02 and abs(d.mean() + half - t.ci[1]) <= 0.02

    # Covariates: choose one multiset per (experiment, covariate), then search
    # within-experiment permutations for the interaction targets.
    cov_values = {}
    for e, specs in COVARIATE_TARGETS.items():
        n = UPV_WITH_COVARIATES if e == "UPV" else len(participants[e])
        cov_values[e] = []
        for (m, s) in specs:
            options = covariate_multisets(n, m, s)
            assert options, (e, m, s)
            cov_values[e].append(options[int(rng.integers(len(options)))])
    cov_participants = {e: (sorted(participants[e])[:UPV_WITH_COVARIATES] if e == "UPV"
                            else sorted(participants[e])) for e in COVARIATE_TARGETS}

    def make_rows(assign):
        rows = []
        for e in COVARIATE_TARGETS:
            for i, pid in enumerate(cov_participants[e]):
                row = dict(experiment_id=e, participant_id=pid,
                           subject_type="student" if e == "UPV" else "professional")
                for c, name in enumerate(COVARIATES):
                    row[name] = int(assign[e][c][i])
                rows.append(row)
        return rows

    assign = {e: [rng.permutation(v) for v in cov_values[e]] for e in COVARIATE_TARGETS}
    report = {}
    for c, name in enumerate(COVARIATES):
        target = INTERACTION_TARGETS[name]
        est, se, p, fit = naive_interaction(raw, make_rows(assign), name)
        start = fit["theta"]
        best = abs(est - target)
        for it in range(search_iters):
            if best < 0.05:
                break
            e = list(COVARIATE_TARGETS)[int(rng.integers(4))]
            v = assign[e][c]
            i, j = rng.choice(len(v), size=2, replace=False)
            if v[i] == v[j]:
                continue
            v[i], v[j] = v[j], v[i]
            est2, se2, p2, fit2 = naive_interaction(raw, make_rows(assign), name, start)
            ok_p = (p2 <= 0.10) if name == "programming" else (p2 > 0.10)
            if abs(est2 - target) < best and (ok_p or abs(est2 - target) > 1.0):
                best = abs(est2 - target)
                est, se, p, start = est2, se2, p2, fit2["theta"]
            else:
                v[i], v[j] = v[j], v[i]
        report[name] = dict(estimate=est, se=se, p=p)
        print(f"{name:13s} interaction {est:8.3f} (target {target}) se {se:.3f} p {p:.4f}")

    cov_rows = make_rows(assign)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "raw.csv", "w", newline="\n") as f:
        f.write("experiment_id,participant_id,treatment,outcome\n")
        for (e, p, a, v) in raw:
            f.write(f"{e},{p},{a},{'' if v is None else format(v, f'.{DECIMALS}f')}\n")
    with open(out_dir / "summary.csv", "w", newline="\n") as f:
        f.write("experiment_id,n_control,n_treatment,mean_control,sd_control,"
                "mean_treatment,sd_treatment,corr,design\n")
        for s in summaries:
            f.write("{experiment_id},{n_control},{n_treatment},{mean_control:.2f},{sd_control:.2f},"
                    "{mean_treatment:.2f},{sd_treatment:.2f},{corr:.2f},{design}\n".format(**s))
    with open(out_dir / "covariates.csv", "w", newline="\n") as f:
        f.write("experiment_id,participant_id,subject_type,programming,java,unit_testing,junit\n")
        for r in cov_rows:
            f.write("{experiment_id},{participant_id},{subject_type},{programming},{java},"
                    "{unit_testing},{junit}\n".format(**r))
    return report


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seed", type=int, default=20190101)
    ap.add_argument("--out", type=Path, default=Path("data/illustrative"))
    ap.add_argument("--search-iters", type=int, default=400)
    args = ap.parse_args()
    build(args.seed, args.out, args.search_iters)


if __name__ == "__main__":
    main()
