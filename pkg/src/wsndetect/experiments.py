"""Monte Carlo and closed-form performance experiments.

Trials are split into fixed-size shards; shard ``s`` under hypothesis ``i``
draws from ``SeedSequence([base_seed, s, i])``.  Shards are independent, so
they can be computed on any number of threads and are always reassembled
in shard order, which keeps outputs byte-identical.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (
    asymptotic_spec,
    croc_theoretical,
    deflection_glr,
    deflection_lmp,
    local_mle_asymptotic_cov,
    marginal_fisher_tilde,
    saddlepoint_quantile,
)
from .consensus import TransmissionLedger, spatial_sum
from .detectors import StatisticKind, centralized_statistic_values, lmp_distributed_values
from .estimators import empirical_estimator_covariance
from .model import GaussianMeanModel, Hypothesis, build_toeplitz_cov, draw_samples
from .network import SensorNetwork, generate_geometric_network, local_degree_weights, read_network

SHARD_SIZE = 1000
_HYP_INDEX = {Hypothesis.H0: 0, Hypothesis.H1: 1}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(header: list[str], rows, metadata: dict) -> str:
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- Monte Carlo core ---------------------------------------------------------


def _shard_rng(base_seed: int, shard: int, hypothesis: Hypothesis):
    return np.random.default_rng(np.random.SeedSequence([base_seed, shard, _HYP_INDEX[hypothesis]]))


def simulate_statistics(
    model: GaussianMeanModel,
    L: int,
    kinds,
    n_trials: int,
    base_seed: int,
    network: SensorNetwork | None = None,
    n_it: int = 20,
    reference_node: int = 0,
    threads: int = 1,
    ledger: TransmissionLedger | None = None,
) -> dict:
    """Statistic values per ``(kind, hypothesis)``, in trial order.

    L-MP kinds are run through consensus when ``network`` is given; the value
    reported for a trial is the one held by ``reference_node``.
    """
    kinds = [StatisticKind(k) for k in kinds]
    null = model.null
    n_shards = -(-n_trials // SHARD_SIZE)

    def run(job):
        shard, hyp = job
        m = min(SHARD_SIZE, n_trials - shard * SHARD_SIZE)
        z = draw_samples(model, hyp, L, _shard_rng(base_seed, shard, hyp), batch=(m,))
        out = {}
        local_ledger = TransmissionLedger(model.n_sensors) if network is not None else None
        for kind in kinds:
            if network is not None and not kind.is_glr:
                per_node = lmp_distributed_values(z, network, null, n_it, local_ledger)
                out[kind] = per_node[:, reference_node]
            else:
                out[kind] = centralized_statistic_values(kind, z, null)
        return out, local_ledger

    jobs = [(s, h) for h in (Hypothesis.H0, Hypothesis.H1) for s in range(n_shards)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    values = {}
    for kind in kinds:
        for hyp in (Hypothesis.H0, Hypothesis.H1):
            parts = [res[kind] for (job, (res, _)) in zip(jobs, results) if job[1] is hyp]
            values[kind, hyp] = np.concatenate(parts)
    if ledger is not None:
        for _, led in results:
            if led is not None:
                ledger.per_node_broadcasts += led.per_node_broadcasts
    return values


def empirical_croc(stat_h0, stat_h1, gammas):
    """``P_FA = P(T >= gamma | H0)`` and ``P_MD = P(T < gamma | H1)`` on a grid."""
    s0 = np.sort(np.asarray(stat_h0))
    s1 = np.sort(np.asarray(stat_h1))
    pfa = 1.0 - np.searchsorted(s0, gammas, side="left") / s0.size
    pmd = np.searchsorted(s1, gammas, side="left") / s1.size
    return pfa, pmd


def quantile_grid(stat_h0, stat_h1, size: int) -> np.ndarray:
    pooled = np.concatenate([stat_h0, stat_h1])
    return np.quantile(pooled, np.linspace(0.0, 1.0, size))


# -- CROC tables ----------------------------------------------------------------


@dataclass
class CrocTable:
    kind: StatisticKind
    gamma: np.ndarray
    pfa_mc: np.ndarray
    pmd_mc: np.ndarray
    pfa_theory: np.ndarray
    pmd_theory: np.ndarray
    n_trials: int
    metadata: dict = field(default_factory=dict)

    COLUMNS = ["gamma", "pfa_mc", "pmd_mc", "pfa_theory", "pmd_theory", "mc_stderr_pfa", "mc_stderr_pmd"]

    @property
    def stderr_pfa(self) -> np.ndarray:
        return np.sqrt(self.pfa_mc * (1.0 - self.pfa_mc) / self.n_trials)

    @property
    def stderr_pmd(self) -> np.ndarray:
        return np.sqrt(self.pmd_mc * (1.0 - self.pmd_mc) / self.n_trials)

    def rows(self):
        return zip(self.gamma, self.pfa_mc, self.pmd_mc, self.pfa_theory, self.pmd_theory,
                   self.stderr_pfa, self.stderr_pmd)

    def to_csv(self) -> str:
        return write_table(self.COLUMNS, self.rows(), {"statistic": self.kind.value, **self.metadata})

    def theory_pmd_at_pfa(self, pfa) -> np.ndarray:
        """Theoretical miss probability at a given false-alarm level (CROC interpolation)."""
        return _interp_curve(self.pfa_theory, self.pmd_theory, pfa)

    def mc_pmd_at_pfa(self, pfa) -> np.ndarray:
        return _interp_curve(self.pfa_mc, self.pmd_mc, pfa)


def _interp_curve(pfa_curve, pmd_curve, pfa):
    # the grid runs with decreasing P_FA; np.interp wants increasing abscissae
    return np.interp(pfa, pfa_curve[::-1], pmd_curve[::-1])


def run_croc_experiment(
    cfg,
    network: SensorNetwork | None = None,
    threads: int = 1,
    ledger: TransmissionLedger | None = None,
) -> dict[StatisticKind, CrocTable]:
    """Monte Carlo CROC for each requested statistic, joined with its asymptotic curve."""
    model = cfg.model()
    kinds = [StatisticKind.for_model(name, model.cov_known) for name in cfg.statistics]
    if network is None and cfg.distributed:
        network = network_for_config(cfg)
    sim_network = network if cfg.distributed else None
    values = simulate_statistics(
        model, cfg.L, kinds, cfg.n_trials, cfg.base_seed,
        network=sim_network, n_it=cfg.n_it, reference_node=cfg.reference_node,
        threads=threads, ledger=ledger,
    )
    tables = {}
    for kind in kinds:
        h0, h1 = values[kind, Hypothesis.H0], values[kind, Hypothesis.H1]
        gammas = quantile_grid(h0, h1, cfg.grid_size)
        pfa, pmd = empirical_croc(h0, h1, gammas)
        theory = croc_theoretical(asymptotic_spec(kind, model, cfg.L), gammas)
        meta = {
            "n_trials": cfg.n_trials,
            "L": cfg.L,
            "rho": cfg.rho if cfg.cov is None else "custom",
            "seed": cfg.base_seed,
            "network": network.digest() if sim_network is not None and not kind.is_glr else "centralized",
            "n_it": cfg.n_it if sim_network is not None and not kind.is_glr else 0,
        }
        tables[kind] = CrocTable(kind, gammas, pfa, pmd, theory[:, 0], theory[:, 1], cfg.n_trials, meta)
    return tables


def theoretical_croc_table(cfg, kind: StatisticKind, gammas=None) -> str:
    """CSV of the asymptotic curve alone, on ``gammas`` or an automatic quantile grid."""
    model = cfg.model()
    spec = asymptotic_spec(kind, model, cfg.L)
    if gammas is None:
        lo = saddlepoint_quantile(spec.dist_h1, 1.0 - 1e-4)
        hi = saddlepoint_quantile(spec.dist_h0, 1e-4)
        lo = min(lo, saddlepoint_quantile(spec.dist_h0, 0.999))
        gammas = np.linspace(lo, max(hi, lo * 1.01), cfg.grid_size)
    curve = croc_theoretical(spec, gammas)
    meta = {"statistic": StatisticKind(kind).value, "L": cfg.L, "rho": cfg.rho, "seed": cfg.base_seed}
    return write_table(["gamma", "pfa_theory", "pmd_theory"], zip(gammas, curve[:, 0], curve[:, 1]), meta)


def network_for_config(cfg) -> SensorNetwork:
    """The network named in the config, or the one generated from its seed."""
    if cfg.network_file is not None:
        net = read_network(cfg.network_file)
    else:
        net = generate_geometric_network(cfg.n_sensors, cfg.target_edges, cfg.side, cfg.network_seed)
    if net.n_nodes != cfg.n_sensors:
        raise ValueError(f"network has {net.n_nodes} nodes, model has {cfg.n_sensors}")
    return net


# -- deflection -----------------------------------------------------------------


@dataclass
class DeflectionTable:
    rho: np.ndarray
    phi_degrees: np.ndarray
    ratio: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return write_table(["rho", "phi_degrees", "ratio"], zip(self.rho, self.phi_degrees, self.ratio),
                           self.metadata)

    def for_rho(self, rho: float):
        mask = self.rho == rho
        return self.phi_degrees[mask], self.ratio[mask]


def deflection_sweep(rho_list, phi_grid_degrees, norm_theta1: float = 1.0, L: int = 20) -> DeflectionTable:
    """L-MP over GLR deflection ratio for two sensors with ``theta1 = |theta1| (cos phi, sin phi)``."""
    rhos, phis, ratios = [], [], []
    for rho in rho_list:
        cov = build_toeplitz_cov(rho, 2)
        for phi in phi_grid_degrees:
            t = math.radians(phi)
            theta1 = norm_theta1 * np.array([math.cos(t), math.sin(t)])
            model = GaussianMeanModel(np.zeros(2), theta1, cov)
            rhos.append(float(rho))
            phis.append(float(phi))
            ratios.append(deflection_lmp(model, L) / deflection_glr(model, L))
    meta = {"norm_theta1": norm_theta1, "L": L, "seed": "none"}
    return DeflectionTable(np.array(rhos), np.array(phis), np.array(ratios), meta)


# -- energy ---------------------------------------------------------------------


@dataclass
class EnergyReport:
    n_nodes: int
    n_it: int
    statistic: str
    lmp_broadcasts: int
    glr_broadcasts_model: float
    glr_constant: float
    measured: TransmissionLedger | None = None

    def to_text(self) -> str:
        lines = [
            f"statistic={self.statistic}",
            f"n_nodes={self.n_nodes}",
            f"n_it={self.n_it}",
            f"lmp_broadcasts={self.lmp_broadcasts}",
            f"glr_broadcasts_model={_fmt(float(self.glr_broadcasts_model))}",
            f"glr_constant={_fmt(float(self.glr_constant))}",
        ]
        if self.measured is not None:
            lines.append(f"ledger_total={self.measured.total_broadcasts}")
            lines.append("ledger_per_node=" + ",".join(str(int(v)) for v in self.measured.per_node_broadcasts))
        return "\n".join(lines) + "\n"


def energy_report(
    n: int, n_it: int, statistic_kind: str = "lmp", ledger: TransmissionLedger | None = None,
    glr_constant: float = 1.0,
) -> EnergyReport:
    """Broadcast counts: L-MP measured from one spatial-sum run, GLR modeled as ``c N^2``.

    Without a supplied ledger the spatial sum is executed on an ``n``-node
    complete graph just to count transmissions (the count does not depend on
    the topology).
    """
    if ledger is None:
        ledger = TransmissionLedger(n)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        spatial_sum(local_degree_weights(edges, n), np.zeros(n), n_it, ledger)
    return EnergyReport(
        n_nodes=n,
        n_it=n_it,
        statistic=statistic_kind,
        lmp_broadcasts=ledger.total_broadcasts,
        glr_broadcasts_model=glr_constant * n * n,
        glr_constant=glr_constant,
        measured=ledger,
    )


# -- estimator asymptotics --------------------------------------------------------


def validate_estimator_asymptotics(model: GaussianMeanModel, L: int, n_trials: int, seed: int,
                                   hypothesis=Hypothesis.H0) -> dict:
    """Compare the empirical covariance of the local means with the large-sample prediction."""
    if n_trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    empirical = empirical_estimator_covariance(model, hypothesis, L, n_trials, seed)
    i_tilde, D = marginal_fisher_tilde(model.cov)
    predicted = local_mle_asymptotic_cov(i_tilde, D, L)
    diag_rel = np.abs(np.diag(empirical) - np.diag(predicted)) / np.diag(predicted)
    off = ~np.eye(model.n_sensors, dtype=bool)
    off_abs = np.abs(empirical - predicted)[off]
    return {
        "L": L,
        "n_trials": n_trials,
        "seed": seed,
        "max_rel_diag_error": float(diag_rel.max()),
        "max_abs_offdiag_error": float(off_abs.max()) if off_abs.size else 0.0,
        "empirical": empirical,
        "predicted": predicted,
    }
