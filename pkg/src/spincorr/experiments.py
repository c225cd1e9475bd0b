"""Experiment families: each ``run_*`` returns output tables for one config."""

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis as an
from . import classical as cl
from . import quantum as qm
from .config import ConfigError, check_capacity
from .output import Table
from .rng import uniforms

H_SETTLE_TOL = 0.05


def worker_count():
    """Worker threads from ``SPINCORR_THREADS`` (default 1). Never changes outputs."""
    raw = os.environ.get("SPINCORR_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SPINCORR_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("SPINCORR_THREADS must be >= 1")
    return n


def default_lambda_cut(n_steps):
    # Regular orbits shear tangent vectors linearly, so their finite-time
    # exponent decays like ln(n)/n rather than 1/n.
    return 3.0 * math.log(n_steps) / n_steps


# ------------------------------------------------------------------ helpers

def _quantum_run(qn, params, ic, n_kicks, snapshots=None):
    """Per-kick quantum observables for a coherent product initial state."""
    F = qm.build_floquet(params)
    psi = qm.coherent_product(qn, *ic)
    rows = {"S": [], "L": [], "var_L": [], "p_lz": [], "p_jz": []}
    for psi_n in qm.evolve(F, psi, n_kicks):
        S, L, _ = qm.expect_components(psi_n)
        rows["S"].append(S)
        rows["L"].append(L)
        rows["var_L"].append((qn.l * (qn.l + 1) - L @ L) / (qn.l * (qn.l + 1)))
        rows["p_lz"].append(qm.dist_Lz(psi_n).probs)
        rows["p_jz"].append(qm.dist_Jz(psi_n).probs)
    return {k: np.array(v) for k, v in rows.items()}


def _classical_run(cfg, s, l, gamma, n_kicks, workers):
    ens = cl.make_ensemble(s, l, cfg.ic_radians, cfg.n_traj, cfg.master_seed, cfg.chunk_size)
    qn = qm.QuantumNumbers(s, l)
    params = cl.ClassicalParams(cfg.a, gamma, qn.mag_l / qn.mag_s)
    return cl.observe_ensemble(ens, params, n_kicks, float(s), float(l), workers=workers)


def _paired_run(cfg, s, l, n_kicks, workers):
    """Quantum evolution on its own thread alongside the chunked Liouville ensemble."""
    check_capacity(s, l)
    qn = qm.QuantumNumbers(s, l)
    params = qm.ModelParams.from_gamma(qn, cfg.a, cfg.gamma)
    with ThreadPoolExecutor(max_workers=1) as pool:
        fut = pool.submit(_quantum_run, qn, params, cfg.ic_radians, n_kicks)
        obs = _classical_run(cfg, s, l, cfg.gamma, n_kicks, workers)
        q = fut.result()
    return qn, params, q, obs


def _entropy(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


# ------------------------------------------------------------- experiments

def run_regime_map(cfg, workers=1):
    n_steps = cfg.n_steps
    cut = cfg.lambda_cut if cfg.lambda_cut is not None else default_lambda_cut(n_steps)
    cells = [(g, r) for g in cfg.gamma_values for r in cfg.r_values]
    if not cells:
        raise ConfigError("empty parameter grid")
    m = cfg.samples_per_cell

    def one(k):
        g, r = cells[k]
        u = uniforms(cfg.master_seed, np.arange(k * m, (k + 1) * m, dtype=np.uint64), 4)
        pts = np.concatenate([cl.sample_uniform_sphere(u[0], u[1]),
                              cl.sample_uniform_sphere(u[2], u[3])], axis=1)
        return cl.lyapunov_many(pts, cl.ClassicalParams(cfg.a, g, r), n_steps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lams = list(pool.map(one, range(len(cells))))
    else:
        lams = [one(k) for k in range(len(cells))]

    t = Table("regime_map", ["gamma", "r", "samples", "lambda_cut", "chaotic_fraction",
                             "regime", "median_lambda", "max_lambda"])
    for (g, r), lam in zip(cells, lams):
        frac = float(np.mean(lam > cut))
        regime = "regular" if frac < 0.01 else ("chaotic" if frac > 0.99 else "mixed")
        t.add(gamma=g, r=r, samples=m, lambda_cut=cut, chaotic_fraction=frac, regime=regime,
              median_lambda=float(np.median(lam)), max_lambda=float(np.max(lam)))
    return [t]


def run_relax(cfg, workers=1):
    s, l = cfg.s, cfg.l
    qn, params, q, obs = _paired_run(cfg, s, l, cfg.n_kicks, workers)
    ts = Table("relax", ["n", "Lz_q", "Lz_c", "deltaLz", "var_q", "var_c",
                         "H_Lz_q", "H_Lz_c", "H_Jz_q", "H_Jz_c", "sigma_Lz", "sigma_Jz",
                         "R_Lz", "R_Jz"])
    nl, nj = qn.dim_l, qn.dim_s + qn.dim_l - 1
    for n in range(cfg.n_kicks + 1):
        lq = q["L"][n][2] / qn.mag_l
        lc = obs.mean[n, 5]
        var_c = 1.0 - float(obs.mean[n, 3:] @ obs.mean[n, 3:])
        sig_l = an.sigma_dist(q["p_lz"][n], obs.p_lz[n])
        sig_j = an.sigma_dist(q["p_jz"][n], obs.p_jz[n])
        ts.add(n=n, Lz_q=lq, Lz_c=lc, deltaLz=abs(lq - lc) * qn.mag_l,
               var_q=q["var_L"][n], var_c=var_c,
               H_Lz_q=_entropy(q["p_lz"][n]), H_Lz_c=_entropy(obs.p_lz[n]),
               H_Jz_q=_entropy(q["p_jz"][n]), H_Jz_c=_entropy(obs.p_jz[n]),
               sigma_Lz=sig_l, sigma_Jz=sig_j,
               R_Lz=an.relative_R(sig_l, nl), R_Jz=an.relative_R(sig_j, nj))
    dist = Table("relax_distributions", ["n", "observable", "m", "P_q", "P_c", "P_mc"])
    snaps = cfg.snapshots if cfg.snapshots is not None else (0, cfg.n_kicks)
    mc_l = qm.microcanonical_Lz(l).probs
    mc_j = qm.microcanonical_Jz(s, l)
    for n in snaps:
        for m, pq, pc, pm in zip(qm.m_values(l), q["p_lz"][n], obs.p_lz[n], mc_l):
            dist.add(n=n, observable="Lz", m=m, P_q=pq, P_c=pc, P_mc=pm)
        for m, pq, pc, pm in zip(mc_j.labels, q["p_jz"][n], obs.p_jz[n], mc_j.probs):
            dist.add(n=n, observable="Jz", m=m, P_q=pq, P_c=pc, P_mc=pm)
    return [ts, dist]


def run_variance_growth(cfg, workers=1):
    s, l = cfg.s, cfg.l
    qn, params, q, obs = _paired_run(cfg, s, l, cfg.n_kicks, workers)
    var_c = 1.0 - np.sum(obs.mean[:, 3:] ** 2, axis=1)
    series = Table("variance_series", ["n", "var_q", "var_c"])
    for n in range(cfg.n_kicks + 1):
        series.add(n=n, var_q=q["var_L"][n], var_c=var_c[n])
    lam_L = cl.lyapunov_max(cl.angles_to_point(*cfg.ic_radians),
                            cl.ClassicalParams(cfg.a, cfg.gamma, params.r), cfg.n_steps)
    fits = Table("variance_fit", ["source", "lambda_w", "lambda_w_err", "window_end",
                                  "t_sat", "lambda_L"])
    for src, y in (("quantum", q["var_L"]), ("classical", var_c)):
        res = an.fit_variance_growth(y, float(l))
        lam = res.params["lambda_w"]
        fits.add(source=src, lambda_w=lam, lambda_w_err=res.stderr["lambda_w"],
                 window_end=res.window[1],
                 t_sat=an.saturation_time(float(l), lam) if lam > 0 else None,
                 lambda_L=lam_L)
    return [series, fits]


def run_breaktime_scan(cfg, workers=1):
    rows = Table("breaktime", ["l", "s", "N_l", "gamma", "c", "t_b"])
    series = Table("breaktime_series", ["l", "n", "Lz_q", "Lz_c", "deltaLz"])
    ls, tbs = [], []
    for lval in cfg.l_values:
        s, l = cfg.spins_for(lval)
        qn, params, q, obs = _paired_run(cfg, s, l, cfg.n_kicks, workers)
        lz_q = q["L"][:, 2]
        lz_c = obs.mean[:, 5] * qn.mag_l
        delta = an.delta_Lz(lz_q, lz_c)
        tb = an.break_time(delta, cfg.p)
        rows.add(l=l, s=s, N_l=qn.dim_l, gamma=params.gamma, c=params.c, t_b=tb)
        for n in range(cfg.n_kicks + 1):
            series.add(l=l, n=n, Lz_q=lz_q[n], Lz_c=lz_c[n], deltaLz=delta[n])
        if tb is not None:
            ls.append(float(l))
            tbs.append(tb)
    out = [rows, series]
    if len(ls) >= 2:
        res = an.fit_break_law(ls, tbs, cfg.p)
        fit = Table("breaktime_fit", ["p", "points", "lambda_qc", "lambda_qc_err", "reduced_chi2"])
        fit.add(p=cfg.p, points=len(ls), lambda_qc=res.params["lambda_qc"],
                lambda_qc_err=res.stderr["lambda_qc"], reduced_chi2=res.reduced_chi2)
        out.append(fit)
    return out


def relaxation_kick(H, window):
    """First kick after which ``H`` stays within tolerance of its window mean."""
    lo, hi = window
    ref = float(np.mean(H[lo:hi + 1]))
    off = np.abs(H[:hi + 1] - ref) > H_SETTLE_TOL
    bad = np.nonzero(off)[0]
    return 0 if bad.size == 0 else int(bad[-1]) + 1


def run_scaling_scan(cfg, workers=1):
    lo, hi = cfg.window
    samples = Table("scaling_samples", ["observable", "l", "s", "N", "n", "sigma", "R"])
    warn = Table("scaling_warnings", ["l", "window_start", "t_rel", "message"])
    data = {"Lz": ([], []), "Jz": ([], [])}
    for lval in cfg.l_values:
        s, l = cfg.spins_for(lval)
        qn, params, q, obs = _paired_run(cfg, s, l, hi, workers)
        H = np.array([_entropy(p) for p in q["p_lz"]])
        t_rel = relaxation_kick(H, (lo, hi))
        if lo < t_rel:
            warn.add(l=l, window_start=lo, t_rel=t_rel,
                     message="window starts before relaxation")
        nl, nj = qn.dim_l, qn.dim_s + qn.dim_l - 1
        for n in range(lo, hi + 1):
            for name, N, pq, pc in (("Lz", nl, q["p_lz"][n], obs.p_lz[n]),
                                    ("Jz", nj, q["p_jz"][n], obs.p_jz[n])):
                sig = an.sigma_dist(pq, pc)
                R = an.relative_R(sig, N)
                samples.add(observable=name, l=l, s=s, N=N, n=n, sigma=sig, R=R)
                data[name][0].append(N)
                data[name][1].append(R)
    out = [samples, warn]
    if len(cfg.l_values) >= 2:
        fit = Table("scaling_fit", ["observable", "A", "A_err", "B", "B_err", "C", "C_err",
                                    "reduced_chi2", "reduced_chi2_C"])
        for name, (Ns, Rs) in data.items():
            res = an.fit_scaling(Ns, Rs)
            fit.add(observable=name, A=res["A"], A_err=res.stderr["A"], B=res["B"],
                    B_err=res.stderr["B"], C=res["C"], C_err=res.stderr["C"],
                    reduced_chi2=res.reduced_chi2, reduced_chi2_C=res.extra["reduced_chi2_C"])
        out.append(fit)
    return out


def centroid_trajectory(cfg, qn, n_kicks):
    """Single classical trajectory launched at the coherent-state centroid."""
    p0 = cl.angles_to_point(*cfg.ic_radians)
    return cl.trajectory(p0, cl.ClassicalParams(cfg.a, cfg.gamma, qn.mag_l / qn.mag_s), n_kicks)


def run_ehrenfest_scan(cfg, workers=1):
    rows = Table("ehrenfest", ["l", "s", "t_ehr", "max_violation_frac"])
    series = Table("ehrenfest_series", ["l", "n", "Lz_q", "Lz_traj", "xi_Lz", "violation"])
    ls, times = [], []

    def one(lval):
        s, l = cfg.spins_for(lval)
        check_capacity(s, l)
        qn = qm.QuantumNumbers(s, l)
        params = qm.ModelParams.from_gamma(qn, cfg.a, cfg.gamma)
        q = _quantum_run(qn, params, cfg.ic_radians, cfg.n_kicks)
        return s, l, qn, q

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, cfg.l_values))
    else:
        runs = [one(lv) for lv in cfg.l_values]
    for s, l, qn, q in runs:
        lf = float(l)
        traj = centroid_trajectory(cfg, qn, cfg.n_kicks)
        lz_traj = lf * traj[:, 5]
        xi = an.ehrenfest_diff(q["L"][:, 2], lz_traj)
        viol = an.invariant_violation(q["L"], lf)
        t = an.ehrenfest_break_time(viol, cfg.f, lf)
        rows.add(l=l, s=s, t_ehr=t, max_violation_frac=float(viol.max() / lf**2))
        for n in range(cfg.n_kicks + 1):
            series.add(l=l, n=n, Lz_q=q["L"][n][2], Lz_traj=lz_traj[n], xi_Lz=xi[n],
                       violation=viol[n])
        if t is not None and t > 0:
            ls.append(lf)
            times.append(t)
    out = [rows, series]
    if len(ls) >= 2:
        res = an.fit_ehrenfest_law(ls, times, cfg.f)
        fit = Table("ehrenfest_fit", ["f", "points", "lambda", "lambda_err", "reduced_chi2"])
        fit.add(f=cfg.f, points=len(ls), **{"lambda": res["lambda"]},
                lambda_err=res.stderr["lambda"], reduced_chi2=res.reduced_chi2)
        out.append(fit)
    return out


def run_appendix_a(cfg, workers=1):
    t = Table("appendix_a", ["j", "Jx2_q", "Jx2_c", "Jx4_q", "Jx4_c", "dJx4", "dJx4_over_j2"])
    for j in cfg.j_values:
        check_capacity(j)
        jf = float(j)
        q2, q4 = qm.coherent_x_moment(jf, 2), qm.coherent_x_moment(jf, 4)
        c2, c4 = cl.vector_model_moment(jf, 2), cl.vector_model_moment(jf, 4)
        d4 = abs(q4 - c4)
        t.add(j=j, Jx2_q=q2, Jx2_c=c2, Jx4_q=q4, Jx4_c=c4, dJx4=d4, dJx4_over_j2=d4 / jf**2)
    return [t]


RUNNERS = {
    "regime_map": run_regime_map,
    "relax": run_relax,
    "variance_growth": run_variance_growth,
    "breaktime_scan": run_breaktime_scan,
    "scaling_scan": run_scaling_scan,
    "ehrenfest_scan": run_ehrenfest_scan,
    "appendix_a": run_appendix_a,
}


def run_experiment(cfg, out_dir, workers=None):
    """Run ``cfg`` and write one CSV per table into ``out_dir``."""
    import time

    if workers is None:
        workers = worker_count()
    if cfg.experiment not in ("regime_map", "appendix_a"):
        spins = []
        if cfg.s is not None and cfg.experiment in ("relax", "variance_growth"):
            spins += [cfg.s, cfg.l]
        for lv in cfg.l_values or ():
            spins += list(cfg.spins_for(lv))
        check_capacity(*spins)
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    tables = RUNNERS[cfg.experiment](cfg, workers=workers)
    elapsed = time.perf_counter() - start
    paths = [tab.write(out_dir, cfg) for tab in tables]
    # wall-clock lives outside the CSVs so reruns stay byte-identical
    with open(os.path.join(out_dir, "run_info.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"experiment={cfg.experiment}\nconfig_hash={cfg.digest()}\n"
                 f"workers={workers}\nwall_clock_s={elapsed:.3f}\n")
    return tables, paths
