"""
Seeded experiment grid runner.

Each (scheme, d, repetition) cell is fully determined by the experiment config:
the target is built from a seed of (master, target, d, repetition), so every
scheme meets the same targets, and each chain draws from its own stream spawned
from (master, target, scheme, d, repetition).
"""

import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Tuple

import numpy as np
from loguru import logger

from hhmala.adaptation import get_adapter
from hhmala.diagnostics import median_over_coordinates, sin_squared
from hhmala.errors import HHMalaError, StuckChainError
from hhmala.kernel import init_chain_state, step
from hhmala.targets import TargetModel, make_target, sample_exact
from hhmala.vi import run_vi, vi_to_preconditioner

from ..schemas.experiment import SCHEME_CODES, TARGET_CODES, ExperimentConfig, RunRecord


def target_seed(config: ExperimentConfig, d: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, TARGET_CODES[config.target], d, rep])


def cell_seed(config: ExperimentConfig, scheme: str, d: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, TARGET_CODES[config.target], SCHEME_CODES[scheme], d, rep])


def _initial_positions(config: ExperimentConfig, target: TargetModel, rng: np.random.Generator) -> np.ndarray:
    if config.init_mode() == "equilibrium":
        return np.stack([sample_exact(target, rng) for _ in range(config.chains)])
    if target.mode is None:
        raise HHMalaError(f"{target.name} has no mode to initialise from")
    return np.tile(target.mode, (config.chains, 1))


def run_cell(config: ExperimentConfig, scheme: str, d: int, rep: int) -> RunRecord:
    """
    Run one grid cell: build the target, initialise k chains, optionally fit the
    VI preconditioner, then sample with per-step adaptation.

    Library errors are recorded on the returned RunRecord, never raised.
    """
    seq = cell_seed(config, scheme, d, rep)
    record = RunRecord(
        config_hash=config.config_hash(), target=config.target, scheme=scheme, d=d,
        seed=int(seq.generate_state(1)[0]), status="failed",
    )
    try:
        target = make_target(config.target, d, target_seed(config, d, rep), K=config.K, rank=config.rank,
                             beta=config.beta, lam=config.lam)
    except (HHMalaError, ValueError) as e:
        logger.error(f"Target construction failed for {config.target} d={d} rep={rep}: {e}")
        return record.model_copy(update={"error": str(e)})

    init_ss, vi_ss, *chain_ss = seq.spawn(config.chains + 2)
    try:
        positions = _initial_positions(config, target, np.random.default_rng(init_ss))
        states = [init_chain_state(x, target, np.random.default_rng(ss)) for x, ss in zip(positions, chain_ss)]

        frozen, vi_summary = None, None
        if scheme == "diagonal_plus_LR":
            vi_state = run_vi(target, config.vi_rank(), config.vi_config(), np.random.default_rng(vi_ss), initial_mean=positions.mean(axis=0))
            frozen = vi_to_preconditioner(vi_state)
            vi_summary = {
                "iterations": vi_state.iteration,
                "rank": int(vi_state.V.shape[1]),
                "min_delta": float(vi_state.delta.min()),
                "max_delta": float(vi_state.delta.max()),
                "lowrank_frobenius": float(np.linalg.norm(vi_state.V)),
            }
        adapter = get_adapter(scheme, d, config.adapt_config(scheme), positions, frozen=frozen)

        n_iter = config.iterations_for(d)
        truth = target.leading_direction
        trace_every = config.trace_every if truth is not None else 0
        samples = np.empty((n_iter, d))
        trace: List[Tuple[int, float]] = []
        accepted = 0

        start = time.perf_counter()
        for t in range(n_iter):
            p = adapter.preconditioner
            outcomes = [step(s, p, target) for s in states]
            states = [o.new_state for o in outcomes]
            adapter.update(np.stack([s.position for s in states]), [o.accept_prob for o in outcomes])
            samples[t] = states[0].position
            accepted += sum(o.accepted for o in outcomes)
            if trace_every and (t + 1) % trace_every == 0:
                trace.append((t + 1, sin_squared(adapter.leading_direction, truth)))
        wall = time.perf_counter() - start

        report = median_over_coordinates(samples, window=1.0 - config.burn_in)
    except StuckChainError as e:
        logger.warning(f"{scheme} d={d} rep={rep}: {e}")
        return record.model_copy(update={"status": "stuck", "error": str(e)})
    except (HHMalaError, ValueError, np.linalg.LinAlgError) as e:
        logger.error(f"{scheme} d={d} rep={rep} failed: {e}")
        return record.model_copy(update={"error": str(e)})

    final_sin2 = sin_squared(adapter.leading_direction, truth) if truth is not None else None
    record = record.model_copy(update={
        "status": "ok",
        "median_ess": report.median_ess,
        "acceptance_rate": accepted / (n_iter * config.chains),
        "final_sin2": final_sin2,
        "trace": trace or None,
        "vi_summary": vi_summary,
    })
    if config.timing:
        record = record.model_copy(update={"wall_seconds": wall, "ess_per_second": report.median_ess / wall})
    logger.info(f"{config.target} {scheme} d={d} rep={rep}: median ESS {report.median_ess:.1f}, "
                f"acceptance {record.acceptance_rate:.3f}, {wall:.2f}s")
    return record


def _run_cell_args(args) -> RunRecord:
    return run_cell(*args)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> List[RunRecord]:
    """Run every cell of the grid; records come back in grid order whatever the thread count."""
    cells = config.cells()
    if config.alpha_pca < 0.5 and {"eigen", "eigen_identity"} & set(config.scheme):
        logger.warning(
            f"alpha_pca = {config.alpha_pca} is below 0.5; Oja updates may fail to settle on the leading eigenvectors"
        )
    logger.info(f"Running {len(cells)} cells of {config.target} with {threads} worker(s)")
    jobs = [(config, scheme, d, rep) for scheme, d, rep in cells]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_cell_args, jobs))
    else:
        records = [run_cell(*job) for job in jobs]
    failed = sum(r.status != "ok" for r in records)
    logger.info(f"Finished {len(records)} cells ({failed} not ok)")
    return records
