"""
Online disaggregation over the FHMM: the particle filter, the threshold
decision maker and the exact enumeration filter used as its oracle.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

import app.config as config
from app.core.error_handler import CapabilityError, InputError
from app.models.appliance import FHMM, ApplianceState
from app.models.estimate import ApplianceEstimate, DisaggregationEstimate, EstimateBlock
from app.models.settings import PfConfig
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)


def decide(on_probabilities: Sequence[float], decision_threshold: float) -> List[ApplianceState]:
    """ON iff the marginal ON probability reaches the threshold."""
    return [
        ApplianceState.ON if on else ApplianceState.OFF
        for on in decision_mask(np.asarray(on_probabilities, dtype=np.float64), decision_threshold)
    ]


def decision_mask(on_probabilities: np.ndarray, decision_threshold: float) -> np.ndarray:
    return on_probabilities >= decision_threshold


def _check_observations(observations: np.ndarray):
    bad = ~np.isfinite(observations) | (observations < 0)
    if bad.any():
        value = observations[np.flatnonzero(bad)[0]]
        raise InputError(f"observation must be a finite non-negative power, got {value}")


class ParticleFilter(LoggerMixin):
    """
    Particle filter over the joint ON/OFF state of the FHMM appliances.

    Particles are rows of a (particle_count, N) 0/1 matrix, columns in FHMM
    order. Propagation and resampling draw from two child streams of the
    configured seed, so a seed fixes the whole particle trajectory.
    """

    def __init__(self, fhmm: Optional[FHMM] = None, pf_config: Optional[PfConfig] = None):
        self.config = pf_config or PfConfig()
        self.fhmm = fhmm or FHMM()
        propagate_seed, resample_seed = np.random.SeedSequence(self.config.rng_seed).spawn(2)
        self._propagate_rng = np.random.default_rng(propagate_seed)
        self._resample_rng = np.random.default_rng(resample_seed)

        count = self.config.particle_count
        self.particles = np.zeros((count, len(self.fhmm)), dtype=np.float64)
        self.weights = np.full(count, 1.0 / count)
        self.resample_count = 0
        self._last_weights = self.weights
        self._last_particles = self.particles
        self._bind_parameters()

    def _bind_parameters(self):
        transitions = self.fhmm.transitions
        self._on_powers = self.fhmm.on_powers
        self._p_on = transitions[:, 0, 1]
        self._p_off = transitions[:, 1, 0]

    @property
    def appliance_ids(self) -> Tuple[str, ...]:
        return self.fhmm.appliance_ids

    @property
    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))

    def rebind(self, fhmm: FHMM):
        """
        Switch to a new FHMM after a database update.

        Appliances that persist keep their particle column; new appliances
        start OFF in every particle. Weights are kept.
        """
        old_columns = {appliance_id: i for i, appliance_id in enumerate(self.fhmm.appliance_ids)}
        particles = np.zeros((self.config.particle_count, len(fhmm)), dtype=np.float64)
        for j, appliance_id in enumerate(fhmm.appliance_ids):
            if appliance_id in old_columns:
                particles[:, j] = self.particles[:, old_columns[appliance_id]]

        carried = len(set(old_columns) & set(fhmm.appliance_ids))
        self.logger.debug(f"Rebound filter: {len(fhmm)} appliances, {carried} carried over")
        self.fhmm = fhmm
        self.particles = particles
        self._last_particles = particles
        self._last_weights = self.weights
        self._bind_parameters()

    def _advance(self, observation: float) -> np.ndarray:
        """Propagate, weight and (if degenerate) resample; returns the ON marginals before resampling."""
        if self.particles.shape[1]:
            flip = self._p_on + self.particles * (self._p_off - self._p_on)
            flips = self._propagate_rng.random(self.particles.shape) < flip
            self.particles = np.where(flips, 1.0 - self.particles, self.particles)

        predicted = self.particles @ self._on_powers
        log_likelihood = -0.5 * ((observation - predicted) / self.config.observation_noise_stddev) ** 2
        with np.errstate(divide="ignore"):
            log_weights = np.log(self.weights) + log_likelihood
        weights = np.exp(log_weights - log_weights.max())
        self.weights = weights / weights.sum()

        on_probability = self.weights @ self.particles
        self._last_weights = self.weights
        self._last_particles = self.particles

        if self.effective_sample_size < self.config.resample_threshold * self.config.particle_count:
            self._resample()
        return on_probability

    def _resample(self):
        """Systematic resampling back to uniform weights."""
        count = self.config.particle_count
        positions = (self._resample_rng.random() + np.arange(count)) / count
        indices = np.minimum(np.searchsorted(np.cumsum(self.weights), positions), count - 1)
        self.particles = self.particles[indices]
        self.weights = np.full(count, 1.0 / count)
        self.resample_count += 1

    def step(self, observation: float) -> DisaggregationEstimate:
        """Filter one sample and return its estimate (timestamp left at 0)."""
        _check_observations(np.array([observation], dtype=np.float64))
        on_probability = self._advance(float(observation))
        decided = decision_mask(on_probability, self.config.decision_threshold)
        per_appliance = {
            appliance_id: ApplianceEstimate(
                on_probability=float(on_probability[i]),
                decided_state=ApplianceState.ON if decided[i] else ApplianceState.OFF,
                estimated_power=float(self._on_powers[i]) if decided[i] else 0.0,
                on_power=float(self._on_powers[i])
            )
            for i, appliance_id in enumerate(self.appliance_ids)
        }
        return DisaggregationEstimate(
            timestamp=0,
            per_appliance=per_appliance,
            total_estimated_power=float(self._on_powers[decided].sum())
        )

    def map_joint_state(self) -> int:
        """Code of the most probable joint state after the last step (bit i = appliance i)."""
        n = self._last_particles.shape[1]
        codes = (self._last_particles @ (2.0 ** np.arange(n))).astype(np.int64)
        return int(np.argmax(np.bincount(codes, weights=self._last_weights, minlength=2 ** n)))

    def run_block(self, timestamps, observations) -> EstimateBlock:
        """
        Filter a run of samples under the current FHMM.

        Raises:
            InputError: If any observation is negative or not finite
        """
        timestamps = np.asarray(timestamps, dtype=np.int64)
        observations = np.asarray(observations, dtype=np.float64)
        _check_observations(observations)

        n = len(self.fhmm)
        on_probability = np.zeros((len(observations), n))
        for t, observation in enumerate(observations.tolist()):
            on_probability[t] = self._advance(observation)

        decided = decision_mask(on_probability, self.config.decision_threshold)
        return EstimateBlock(
            timestamps=timestamps,
            appliance_ids=self.appliance_ids,
            on_powers=self._on_powers.copy(),
            on_probability=on_probability,
            decided=decided,
            estimated_power=decided * self._on_powers
        )


def pf_init(fhmm: FHMM, pf_config: Optional[PfConfig] = None) -> ParticleFilter:
    """All particles at the all-OFF joint state with uniform weights."""
    return ParticleFilter(fhmm, pf_config)


def pf_step(state: ParticleFilter, observation: float) -> Tuple[ParticleFilter, DisaggregationEstimate]:
    estimate = state.step(observation)
    return state, estimate


@dataclass
class ExactFilterState:
    """Exact filtering posterior over all 2^N joint states, indexed by joint state code."""
    fhmm: FHMM
    posterior: np.ndarray
    noise_stddev: float

    @property
    def on_probability(self) -> np.ndarray:
        return self.posterior @ self.fhmm.joint_states

    @property
    def map_joint_state(self) -> int:
        return int(np.argmax(self.posterior))

    @property
    def expected_power(self) -> float:
        return float(self.posterior @ self.fhmm.joint_observations)


def exact_init(fhmm: FHMM, noise_stddev: float = 25.0, uniform_prior: bool = False,
               max_appliances: Optional[int] = None) -> ExactFilterState:
    """
    Prior for the exact filter: all OFF, or uniform over joint states.

    Raises:
        CapabilityError: If the FHMM has more appliances than can be enumerated
    """
    limit = config.EXACT_FILTER_MAX_APPLIANCES if max_appliances is None else max_appliances
    n = len(fhmm)
    if n > limit:
        raise CapabilityError(f"exact filter supports at most {limit} appliances, got {n}")

    if uniform_prior:
        posterior = np.full(2 ** n, 1.0 / 2 ** n)
    else:
        posterior = np.zeros(2 ** n)
        posterior[0] = 1.0
    return ExactFilterState(fhmm=fhmm, posterior=posterior, noise_stddev=noise_stddev)


def exact_filter_step(state: ExactFilterState, observation: float) -> ExactFilterState:
    """
    One forward-filter step: propagate through every appliance chain, then
    weight by the Gaussian likelihood of the observation.
    """
    _check_observations(np.array([observation], dtype=np.float64))
    n = len(state.fhmm)

    # Flat index bit i is appliance i, which is axis n - 1 - i of the C-ordered tensor
    tensor = state.posterior.reshape((2,) * n)
    for i, transition in enumerate(state.fhmm.transitions):
        axis = n - 1 - i
        tensor = np.moveaxis(np.tensordot(tensor, transition, axes=([axis], [0])), -1, axis)
    predicted = tensor.reshape(-1)

    log_likelihood = -0.5 * ((observation - state.fhmm.joint_observations) / state.noise_stddev) ** 2
    with np.errstate(divide="ignore"):
        log_posterior = np.log(predicted) + log_likelihood
    posterior = np.exp(log_posterior - logsumexp(log_posterior))

    return ExactFilterState(fhmm=state.fhmm, posterior=posterior, noise_stddev=state.noise_stddev)
