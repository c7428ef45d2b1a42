"""
Learned fleet configurator.

A configuration is built one vessel at a time. Each step picks a route, then a
start port among that route's stops, then one of the still unassigned vessels;
each pick comes from its own masked softmax head on top of a shared two-layer
tanh embedding of the construction state. Intermediate steps earn nothing, the
completed configuration earns the mean fulfillment of the cheap algorithm / 100.

Training ascends a clipped surrogate objective with an entropy bonus using
torch autograd and Adam.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.distributions import Categorical

from app.core.appsettings import ConfiguratorSettings, app_settings
from app.core.errors import EcrError, InvalidInputError, TrainingDivergedError
from app.core.seeding import SeedStream, derive_seed
from app.models.configuration import Assignment, FleetConfiguration
from app.models.configurator import (
    ConfiguratorCheckpoint,
    ConfState,
    ConfTriple,
    TrainIteration,
    TrainReport,
)
from app.models.search import AlgorithmSpec
from app.models.topology import Topology
from app.services.evaluation import EvaluationCache, evaluate_configuration

logger = logging.getLogger(__name__)

def route_demand_share(t: Topology) -> Tuple[float, ...]:
    """Share of mean daily demand whose origin and destination both lie on each route"""
    served = np.zeros(len(t.routes))
    total = 0.0
    for pair in t.order_model.pairs:
        mean = t.order_model.mean_daily(pair, t.horizon)
        total += mean
        for index, route in enumerate(t.routes):
            if route.contains(pair.origin) and route.contains(pair.destination):
                served[index] += mean
    if total <= 0:
        return tuple(0.0 for _ in t.routes)
    return tuple(float(x) for x in served / total)


def config_mdp_reset(t: Topology) -> ConfState:
    """Initial construction state: every vessel unassigned"""
    return ConfState(topology=t, slots=tuple(None for _ in t.vessels), demand_share=route_demand_share(t))


def config_features(s: ConfState) -> np.ndarray:
    """
    Raw state features.

    Returns:
        [vessels per route, assigned capacity per route, step / |V|, demand share per route]
    """
    t = s.topology
    route_position = {route.id: index for index, route in enumerate(t.routes)}
    counts = np.zeros(len(t.routes))
    capacity = np.zeros(len(t.routes))
    for vessel, slot in zip(t.vessels, s.slots):
        if slot is not None:
            counts[route_position[slot.route]] += 1
            capacity[route_position[slot.route]] += vessel.capacity
    progress = s.step / len(t.vessels) if t.vessels else 1.0
    return np.concatenate([counts, capacity, [progress], np.asarray(s.demand_share, dtype=float)])


def config_mdp_step(
    s: ConfState,
    triple: ConfTriple,
    evaluate: Optional[Callable[[FleetConfiguration], float]] = None,
) -> Tuple[ConfState, float]:
    """
    Record one assignment.

    Args:
        s: A non-terminal state
        triple: (vessel, route, start port), feasible in s
        evaluate: Terminal reward of a completed configuration

    Returns:
        The next state and its reward; 0 unless the configuration is complete

    Raises:
        InvalidInputError: If the triple is masked in s, or the step completes s without an evaluator
    """
    t = s.topology
    vessel_id, route_id, port_id = triple
    if vessel_id not in s.unassigned:
        raise InvalidInputError(f"vessel '{vessel_id}' is unknown or already assigned")
    route = t.route_index.get(route_id)
    if route is None or not route.contains(port_id):
        raise InvalidInputError(f"port '{port_id}' is not a stop of route '{route_id}'")

    position = next(index for index, vessel in enumerate(t.vessels) if vessel.id == vessel_id)
    slots = list(s.slots)
    slots[position] = Assignment(vessel=vessel_id, route=route_id, start_port=port_id)
    next_state = ConfState(topology=t, slots=tuple(slots), demand_share=s.demand_share)
    if not next_state.terminal:
        return next_state, 0.0
    if evaluate is None:
        raise InvalidInputError("terminal step needs an evaluator")
    return next_state, float(evaluate(next_state.configuration()))


def _masked_logits(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    return logits.masked_fill(~mask, torch.finfo(logits.dtype).min)


@dataclass
class StepBatch:
    """Construction steps stacked row-wise"""
    features: np.ndarray
    routes: np.ndarray
    ports: np.ndarray
    vessels: np.ndarray
    route_mask: np.ndarray
    port_mask: np.ndarray
    vessel_mask: np.ndarray

    def __len__(self) -> int:
        return len(self.routes)


class ConfiguratorNet(nn.Module):
    """Shared two-layer tanh embedding with route, port and vessel heads"""

    def __init__(self, n_features: int, n_routes: int, n_ports: int, n_vessels: int, hidden_width: int):
        super().__init__()
        self.n_routes = n_routes
        self.n_ports = n_ports
        self.embed = nn.Sequential(
            nn.Linear(n_features, hidden_width),
            nn.Tanh(),
            nn.Linear(hidden_width, hidden_width),
            nn.Tanh(),
        )
        self.route_head = nn.Linear(hidden_width, n_routes)
        self.port_head = nn.Linear(hidden_width + n_routes, n_ports)
        self.vessel_head = nn.Linear(hidden_width + n_routes + n_ports, n_vessels)

    def heads(
        self,
        features: torch.Tensor,
        routes: torch.Tensor,
        ports: torch.Tensor,
        masks: Tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    ) -> Tuple[Categorical, Categorical, Categorical]:
        """Distributions of the three heads, each conditioned on the earlier picks"""
        route_mask, port_mask, vessel_mask = masks
        emb = self.embed(features)
        route_hot = F.one_hot(routes, self.n_routes).to(emb.dtype)
        port_hot = F.one_hot(ports, self.n_ports).to(emb.dtype)
        route_logits = self.route_head(emb)
        port_logits = self.port_head(torch.cat([emb, route_hot], dim=-1))
        vessel_logits = self.vessel_head(torch.cat([emb, route_hot, port_hot], dim=-1))
        return (
            Categorical(logits=_masked_logits(route_logits, route_mask)),
            Categorical(logits=_masked_logits(port_logits, port_mask)),
            Categorical(logits=_masked_logits(vessel_logits, vessel_mask)),
        )


class ConfiguratorPolicy:
    """Configurator network for one topology plus the masks and feature scaling it needs"""

    def __init__(self, t: Topology, hidden_width: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                 head_scale: float = 0.0):
        self.topology = t
        self.hidden_width = hidden_width or app_settings.configurator.hidden_width
        self.route_ids = [route.id for route in t.routes]
        self.port_ids = [port.id for port in t.ports]
        self.vessel_ids = [vessel.id for vessel in t.vessels]
        self.total_capacity = max(1, sum(vessel.capacity for vessel in t.vessels))
        self.stop_mask = np.array(
            [[port in route.stops for port in self.port_ids] for route in t.routes], dtype=bool
        ).reshape(len(self.route_ids), len(self.port_ids))

        n_routes, n_ports, n_vessels = self.head_sizes
        self.net = ConfiguratorNet(3 * n_routes + 1, n_routes, n_ports, n_vessels, self.hidden_width).double()
        self._initialize(rng or np.random.default_rng(0), head_scale)

    def _initialize(self, rng: np.random.Generator, head_scale: float) -> None:
        """Seeded scaled-normal weights and zero biases; zero head_scale makes every head uniform"""
        layers = [(layer, 1.0) for layer in self.net.embed if isinstance(layer, nn.Linear)]
        layers += [(self.net.route_head, head_scale), (self.net.port_head, head_scale), (self.net.vessel_head, head_scale)]
        with torch.no_grad():
            for layer, scale in layers:
                fan_out, fan_in = layer.weight.shape
                layer.weight.copy_(torch.from_numpy(rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in))))
                layer.bias.zero_()

    @property
    def head_sizes(self) -> Tuple[int, int, int]:
        return len(self.route_ids), len(self.port_ids), len(self.vessel_ids)

    def normalize(self, features: np.ndarray) -> np.ndarray:
        n_routes = len(self.route_ids)
        scaled = np.array(features, dtype=float, copy=True)
        scaled[..., :n_routes] /= max(1, len(self.vessel_ids))
        scaled[..., n_routes:2 * n_routes] /= self.total_capacity
        return scaled

    def masks(self, s: ConfState) -> Tuple[np.ndarray, np.ndarray]:
        """Route mask (routes with a feasible completion) and vessel mask (unassigned vessels)"""
        unassigned = s.unassigned
        vessel_mask = np.array([vessel in unassigned for vessel in self.vessel_ids], dtype=bool)
        route_mask = self.stop_mask.any(axis=1) & vessel_mask.any()
        return route_mask, vessel_mask

    def distributions(self, batch: StepBatch) -> Tuple[Categorical, Categorical, Categorical]:
        return self.net.heads(
            torch.from_numpy(self.normalize(batch.features)),
            torch.from_numpy(batch.routes),
            torch.from_numpy(batch.ports),
            (
                torch.from_numpy(batch.route_mask),
                torch.from_numpy(batch.port_mask),
                torch.from_numpy(batch.vessel_mask),
            ),
        )

    def evaluate_steps(self, batch: StepBatch) -> Tuple[torch.Tensor, torch.Tensor]:
        """Joint log-probability of each recorded step and the summed entropy of its three heads"""
        route_dist, port_dist, vessel_dist = self.distributions(batch)
        logp = (
            route_dist.log_prob(torch.from_numpy(batch.routes))
            + port_dist.log_prob(torch.from_numpy(batch.ports))
            + vessel_dist.log_prob(torch.from_numpy(batch.vessels))
        )
        entropy = route_dist.entropy() + port_dist.entropy() + vessel_dist.entropy()
        return logp, entropy

    def log_prob(self, batch: StepBatch) -> np.ndarray:
        with torch.no_grad():
            logp, _ = self.evaluate_steps(batch)
        return logp.numpy()

    def surrogate(self, batch: StepBatch, old_logp: np.ndarray, advantages: np.ndarray,
                  clip_ratio: float, entropy_coef: float) -> Tuple[torch.Tensor, float]:
        """
        Clipped surrogate plus entropy bonus, to be maximized.

        Returns:
            (objective with its graph, mean entropy per step)
        """
        logp, entropy = self.evaluate_steps(batch)
        advantages = torch.from_numpy(np.asarray(advantages, dtype=float))
        ratio = torch.exp(logp - torch.from_numpy(np.asarray(old_logp, dtype=float)))
        clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
        objective = torch.min(ratio * advantages, clipped * advantages).mean() + entropy_coef * entropy.mean()
        return objective, float(entropy.mean().detach())


def _choose(probs: np.ndarray, rng: Optional[np.random.Generator]) -> int:
    if rng is None:
        return int(np.argmax(probs))
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def autoregressive_sample(
    pol: ConfiguratorPolicy,
    s: ConfState,
    rng: Optional[np.random.Generator],
) -> Tuple[ConfTriple, float]:
    """
    Pick route, then start port among its stops, then an unassigned vessel.

    Args:
        pol: The configurator policy
        s: A non-terminal construction state
        rng: Sampling stream; None decodes greedily (argmax per head)

    Returns:
        The triple and the sum of the three head log-probabilities

    Raises:
        EcrError: If every action is masked
    """
    route_mask, vessel_mask = pol.masks(s)
    if not route_mask.any() or not vessel_mask.any():
        raise EcrError("every configurator action is masked")

    features = torch.from_numpy(pol.normalize(config_features(s))[None, :])
    n_routes, n_ports, _ = pol.head_sizes
    with torch.no_grad():
        emb = pol.net.embed(features)
        route_dist = Categorical(logits=_masked_logits(pol.net.route_head(emb), torch.from_numpy(route_mask[None, :])))
        route = _choose(route_dist.probs[0].numpy(), rng)

        route_hot = F.one_hot(torch.tensor([route]), n_routes).to(emb.dtype)
        port_logits = pol.net.port_head(torch.cat([emb, route_hot], dim=-1))
        port_dist = Categorical(logits=_masked_logits(port_logits, torch.from_numpy(pol.stop_mask[route][None, :])))
        port = _choose(port_dist.probs[0].numpy(), rng)

        port_hot = F.one_hot(torch.tensor([port]), n_ports).to(emb.dtype)
        vessel_logits = pol.net.vessel_head(torch.cat([emb, route_hot, port_hot], dim=-1))
        vessel_dist = Categorical(logits=_masked_logits(vessel_logits, torch.from_numpy(vessel_mask[None, :])))
        vessel = _choose(vessel_dist.probs[0].numpy(), rng)

        logp = float(
            route_dist.log_prob(torch.tensor([route]))[0]
            + port_dist.log_prob(torch.tensor([port]))[0]
            + vessel_dist.log_prob(torch.tensor([vessel]))[0]
        )
    return (pol.vessel_ids[vessel], pol.route_ids[route], pol.port_ids[port]), logp


def sample_configuration(
    pol: ConfiguratorPolicy,
    t: Topology,
    rng: Optional[np.random.Generator],
) -> Tuple[FleetConfiguration, StepBatch, np.ndarray]:
    """Run the construction process to the end; returns the configuration and its steps"""
    s = config_mdp_reset(t)
    features, routes, ports, vessels, route_masks, port_masks, vessel_masks, logps = ([] for _ in range(8))
    route_position = {route_id: index for index, route_id in enumerate(pol.route_ids)}
    port_position = {port_id: index for index, port_id in enumerate(pol.port_ids)}
    vessel_position = {vessel_id: index for index, vessel_id in enumerate(pol.vessel_ids)}
    while not s.terminal:
        route_mask, vessel_mask = pol.masks(s)
        features.append(config_features(s))
        route_masks.append(route_mask)
        vessel_masks.append(vessel_mask)
        triple, logp = autoregressive_sample(pol, s, rng)
        vessel_id, route_id, port_id = triple
        routes.append(route_position[route_id])
        ports.append(port_position[port_id])
        vessels.append(vessel_position[vessel_id])
        port_masks.append(pol.stop_mask[route_position[route_id]])
        logps.append(logp)
        s, _ = config_mdp_step(s, triple, evaluate=lambda _: 0.0)
    n_routes, n_ports, n_vessels = pol.head_sizes
    n_steps = len(features)
    batch = StepBatch(
        features=np.array(features, dtype=float).reshape(n_steps, 3 * n_routes + 1),
        routes=np.array(routes, dtype=np.int64),
        ports=np.array(ports, dtype=np.int64),
        vessels=np.array(vessels, dtype=np.int64),
        route_mask=np.array(route_masks, dtype=bool).reshape(n_steps, n_routes),
        port_mask=np.array(port_masks, dtype=bool).reshape(n_steps, n_ports),
        vessel_mask=np.array(vessel_masks, dtype=bool).reshape(n_steps, n_vessels),
    )
    return s.configuration(), batch, np.array(logps)


def greedy_configuration(pol: ConfiguratorPolicy, t: Topology) -> FleetConfiguration:
    configuration, _, _ = sample_configuration(pol, t, None)
    return configuration


def batch_advantages(rewards: List[float], baseline: float, normalize: bool = False) -> np.ndarray:
    """Reward minus the running baseline; with normalize, scaled to unit spread when the batch has any"""
    advantages = np.asarray(rewards, dtype=float) - baseline
    spread = advantages.std()
    if normalize and spread > 0:
        advantages = advantages / spread
    return advantages


def concat_batches(batches: List[StepBatch]) -> StepBatch:
    return StepBatch(**{
        name: np.concatenate([getattr(batch, name) for batch in batches])
        for name in ("features", "routes", "ports", "vessels", "route_mask", "port_mask", "vessel_mask")
    })


def train_configurator(
    t: Topology,
    cheap_alg: AlgorithmSpec,
    iterations: Optional[int] = None,
    batch_size: Optional[int] = None,
    hyper: Optional[ConfiguratorSettings] = None,
    seed: int = 0,
    cache: Optional[EvaluationCache] = None,
) -> Tuple[ConfiguratorPolicy, TrainReport]:
    """
    Train the configurator against terminal rewards from cheap_alg rollouts.

    Args:
        t: A valid topology
        cheap_alg: Algorithm whose mean fulfillment / 100 is the terminal reward
        iterations: Policy updates; settings default
        batch_size: Configurations sampled per iteration; settings default
        hyper: Remaining hyperparameters; settings default
        seed: Training seed; sampling, initialization and evaluation seeds derive from it
        cache: Shared evaluation memo; its max_rollouts bounds the total rollouts

    Returns:
        The trained policy and the training report

    Raises:
        TrainingDivergedError: If an iteration's mean reward is not finite
    """
    hyper = hyper or app_settings.configurator
    iterations = hyper.iterations if iterations is None else iterations
    batch_size = batch_size or hyper.batch_size
    cache = cache if cache is not None else EvaluationCache()

    init_rng = np.random.default_rng(derive_seed(seed, SeedStream.TRAIN, 0))
    sample_rng = np.random.default_rng(derive_seed(seed, SeedStream.TRAIN, 1))
    eval_seed = derive_seed(seed, SeedStream.EVAL, 0)

    policy = ConfiguratorPolicy(t, hyper.hidden_width, init_rng)
    optimizer = torch.optim.Adam(policy.net.parameters(), lr=hyper.learning_rate)
    report = TrainReport()
    baseline: Optional[float] = None
    exhausted = False

    for iteration in range(iterations):
        batches, logps, rewards = [], [], []
        for _ in range(batch_size):
            configuration, steps, step_logp = sample_configuration(policy, t, sample_rng)
            if not cache.contains(configuration, cheap_alg, hyper.eval_episodes, eval_seed) \
                    and not cache.can_afford(hyper.eval_episodes):
                exhausted = True
                break
            reward = evaluate_configuration(t, configuration, cheap_alg, hyper.eval_episodes, eval_seed, cache) / 100.0
            report.record(configuration, reward, iteration)
            batches.append(steps)
            logps.append(step_logp)
            rewards.append(reward)

        if rewards:
            mean_reward = float(np.mean(rewards))
            if not np.isfinite(mean_reward):
                logger.error(f"Configurator diverged at iteration {iteration}")
                raise TrainingDivergedError(f"mean reward {mean_reward} at iteration {iteration}")

            baseline = mean_reward if baseline is None else baseline
            advantages = batch_advantages(rewards, baseline, hyper.normalize_advantages)
            baseline = hyper.baseline_momentum * baseline + (1 - hyper.baseline_momentum) * mean_reward

            batch = concat_batches(batches)
            old_logp = np.concatenate(logps)
            step_advantages = np.concatenate([np.full(len(b), a) for b, a in zip(batches, advantages)])
            entropy, grad_norm = 0.0, 0.0
            for epoch in range(hyper.update_epochs):
                objective, step_entropy = policy.surrogate(
                    batch, old_logp, step_advantages, hyper.clip_ratio, hyper.entropy_coef
                )
                optimizer.zero_grad()
                (-objective).backward()
                norm = float(nn.utils.clip_grad_norm_(policy.net.parameters(), hyper.max_grad_norm))
                optimizer.step()
                if epoch == 0:
                    entropy, grad_norm = step_entropy, norm

            report.iterations.append(TrainIteration(
                iteration=iteration,
                mean_reward=mean_reward,
                best_reward=report.best.reward,
                entropy=entropy,
                grad_norm=grad_norm,
            ))
            logger.info(
                f"Configurator iteration {iteration}: mean reward {mean_reward:.4f}, "
                f"best {report.best.reward:.4f}, entropy {entropy:.3f}"
            )
        if exhausted:
            logger.info(f"Rollout budget exhausted after {cache.rollouts} rollouts")
            break

    report.rollouts = cache.rollouts
    if t.vessels:
        report.greedy_configuration = greedy_configuration(policy, t)
    return policy, report


def extract_best_configuration(report: TrainReport) -> FleetConfiguration:
    """Best-ever evaluated configuration; ties go to the earliest discovery"""
    if report.best is None:
        raise InvalidInputError("no configuration was evaluated")
    return report.best.configuration


def save_checkpoint(pol: ConfiguratorPolicy, path: Union[str, Path]) -> None:
    checkpoint = ConfiguratorCheckpoint(
        topology_fingerprint=pol.topology.fingerprint(),
        hidden_width=pol.hidden_width,
        params={name: values.tolist() for name, values in pol.net.state_dict().items()},
    )
    Path(path).write_text(checkpoint.model_dump_json(indent=2), encoding="utf-8")


def load_checkpoint(path: Union[str, Path], t: Topology) -> ConfiguratorPolicy:
    """
    Restore a configurator for topology t.

    Raises:
        InvalidInputError: If the checkpoint belongs to another topology or has another layout
    """
    checkpoint = ConfiguratorCheckpoint.model_validate_json(Path(path).read_text(encoding="utf-8"))
    if checkpoint.format_version != 1:
        raise InvalidInputError(f"unsupported checkpoint format_version {checkpoint.format_version}")
    if checkpoint.topology_fingerprint != t.fingerprint():
        raise InvalidInputError("checkpoint was trained on a different topology")
    policy = ConfiguratorPolicy(t, checkpoint.hidden_width)
    state = policy.net.state_dict()
    if set(checkpoint.params) != set(state):
        raise InvalidInputError(f"params: expected {sorted(state)}, got {sorted(checkpoint.params)}")
    restored = {}
    for name, current in state.items():
        values = torch.tensor(checkpoint.params[name], dtype=current.dtype)
        if values.shape != current.shape:
            raise InvalidInputError(f"params.{name}: shape {tuple(values.shape)}, expected {tuple(current.shape)}")
        restored[name] = values
    policy.net.load_state_dict(restored)
    return policy
