"""The adjudication protocol: investigate, corroborate, falsify, decide.

For one directed pair the loop runs four phases:

  0. Timeline gate. A chronologically impossible pair is refused outright
     with influence score 0.05 and no backend involvement at all.
  1. Seeding. The case file opens with the pair metadata and the seed visual
     similarity; the provisional verdict defaults to (NO, 0.50) so a silent
     controller still yields a decision.
  2. Investigation. The controller is consulted up to `max_steps` times and
     either calls an evidence tool (failures are recorded as evidence, not
     raised) or concludes with a provisional score.
  3. Falsification. A prompt-isolated critic - it sees only the provisional
     verdict and the structured evidence, never the controller's free-form
     thoughts - scores three counter-hypotheses, and the provisional score
     is reduced by their weighted sum (weights scaled by `gamma`), clipped
     back to [0, 1].
  4. Verdict. The final label is re-derived from the post-critic score and
     the decision threshold; the controller's own label is advisory only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .backends import (
    AgentAction,
    Backend,
    BackendRequest,
    CriticResponse,
    ROLE_CONTROLLER,
    ROLE_CRITIC,
)
from .config import AgentConfig
from .core import (
    ClaimKind,
    DirectedPair,
    EvidenceClaim,
    Verdict,
    VerdictTuple,
    derive_verdict,
)
from .errors import DataError, ToolFailure
from .retrieval import seed_similarity_exact, timeline_gate
from .tools import ToolRegistry

TIMELINE_REFUSAL_SCORE = 0.05
DEFAULT_PROVISIONAL: tuple[Verdict, float] = (Verdict.NO, 0.50)


@dataclass
class TrajectoryStep:
    step: int
    phase: int
    action: AgentAction | None
    observation: dict | None

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "phase": self.phase,
            "action": self.action.to_json() if self.action else None,
            "observation": self.observation,
        }


@dataclass
class Trajectory:
    pair_key: str
    steps: list[TrajectoryStep] = field(default_factory=list)
    outcome: VerdictTuple | None = None

    def record(self, phase: int, action: AgentAction | None, observation: dict | None) -> None:
        self.steps.append(TrajectoryStep(step=len(self.steps) + 1, phase=phase,
                                         action=action, observation=observation))

    def lines(self) -> list[str]:
        """JSON Lines rendering: one object per step, then the terminal verdict."""
        rows = [json.dumps({"pair": self.pair_key, **s.to_json()}, sort_keys=True)
                for s in self.steps]
        if self.outcome is not None:
            rows.append(json.dumps({
                "pair": self.pair_key,
                "terminal": True,
                "verdict": self.outcome.verdict.value,
                "confidence": round(self.outcome.confidence, 10),
                "influence_score": round(self.outcome.influence_score, 10),
                "evidence_count": len(self.outcome.evidence),
            }, sort_keys=True))
        return rows


@dataclass(frozen=True)
class CounterHypothesisReport:
    """What the falsification pass did to the provisional score."""

    response: CriticResponse
    provisional_score: float
    penalty: float
    final_score: float


def _claim_line(index: int, claim: EvidenceClaim) -> str:
    brief = json.dumps(claim.payload, sort_keys=True, default=str)
    if len(brief) > 220:
        brief = brief[:217] + "..."
    tool = claim.source_tool or "seed"
    return f"[{index:02d}] {claim.kind.value} ({tool}) score={claim.score:.3f} {brief}"


def serialize_context(evidence: tuple[EvidenceClaim, ...], role: str,
                      pair: DirectedPair | None = None,
                      provisional: tuple[Verdict, float] | None = None,
                      tools: tuple[str, ...] = (),
                      budget_chars: int = 2400) -> str:
    """Deterministic textual case file for a backend.

    When the rendering exceeds the character budget, whole claims are dropped,
    lowest score first and oldest first among equals, until it fits (at least
    one claim is always kept). The controller rendering lists available tools;
    the critic rendering carries the provisional verdict and never anything
    the controller said outside the structured evidence.
    """
    if role not in (ROLE_CONTROLLER, ROLE_CRITIC):
        raise DataError(f"unknown role {role!r}")
    header: list[str] = []
    if pair is not None:
        header.append(f"case: did {pair.source} influence {pair.target}?")
    if role == ROLE_CONTROLLER:
        if tools:
            header.append("tools available: " + ", ".join(tools))
    else:
        if provisional is None:
            raise DataError("critic context requires the provisional verdict")
    if provisional is not None:
        header.append(f"provisional: {provisional[0].value} (score {provisional[1]:.3f})")
    header.append(f"evidence ({len(evidence)} claims):")

    kept = list(range(len(evidence)))

    def render(indices: list[int]) -> str:
        body = [_claim_line(i + 1, evidence[i]) for i in indices]
        return "\n".join(header + body)

    text = render(kept)
    while len(text) > budget_chars and len(kept) > 1:
        drop = min(kept, key=lambda i: (evidence[i].score, i))
        kept.remove(drop)
        text = render(kept)
    return text


def falsify(provisional: tuple[Verdict, float],
            evidence: tuple[EvidenceClaim, ...],
            critic: Backend,
            config: AgentConfig,
            pair: DirectedPair | None = None,
            step: int = 0) -> CounterHypothesisReport:
    """Critic pass: subtract gamma-weighted counter-hypothesis mass.

        final = clip[0,1]( provisional - gamma * sum_k w_k * p_k )

    The critic sees only the provisional verdict and structured evidence.
    """
    context = serialize_context(evidence, ROLE_CRITIC, pair=pair,
                                provisional=provisional,
                                budget_chars=config.context_budget_chars)
    request = BackendRequest(role=ROLE_CRITIC,
                             pair_key=pair.key if pair else "",
                             step=step, context_text=context,
                             provisional=provisional, evidence=evidence)
    response = critic.invoke(request)
    if not isinstance(response, CriticResponse):
        raise DataError(f"critic backend returned {type(response).__name__}, expected CriticResponse")
    response = response.clamped()
    w2, w3, w4 = config.critic_weights
    penalty = config.gamma * (w2 * response.p_intermediary
                              + w3 * response.p_convergence
                              + w4 * response.p_common_source)
    c0 = provisional[1]
    final = min(1.0, max(0.0, c0 - penalty))
    return CounterHypothesisReport(response=response, provisional_score=c0,
                                   penalty=penalty, final_score=final)


def adjudicate_pair(pair: DirectedPair,
                    registry: ToolRegistry,
                    controller: Backend,
                    critic: Backend,
                    config: AgentConfig | None = None,
                    seed_similarity: float | None = None,
                    trajectory_sink: Callable[[Trajectory], None] | None = None) -> VerdictTuple:
    """Run the full protocol for one directed pair; returns the verdict tuple.

    `seed_similarity` is normally handed over from candidate generation; when
    absent it is recomputed exactly from the visual store. Tool failures are
    folded into the evidence; backend failures propagate so callers can mark
    the pair as undecided.
    """
    cfg = config or AgentConfig()
    if controller.role != ROLE_CONTROLLER or critic.role != ROLE_CRITIC:
        raise DataError("backend roles are miswired")
    ctx = registry.ctx
    corpus = ctx.corpus
    if pair.source not in corpus.artists or pair.target not in corpus.artists:
        raise DataError(f"pair {pair.key} references unknown artists")
    trajectory = Trajectory(pair_key=pair.key)

    src, tgt = corpus.artists[pair.source], corpus.artists[pair.target]
    meta_claim = EvidenceClaim(kind=ClaimKind.METADATA, score=0.0, payload={
        "source": pair.source, "target": pair.target,
        "source_years": [src.birth_year, src.death_year],
        "target_years": [tgt.birth_year, tgt.death_year],
    })

    # phase 0: hard chronology check, no backend involvement
    gate = timeline_gate(src, tgt, ctx.delta_years)
    if not gate.passed:
        gate_claim = EvidenceClaim(kind=ClaimKind.TIMELINE, score=0.0,
                                   payload={"passed": False, "reason": gate.reason})
        verdict, confidence = derive_verdict(TIMELINE_REFUSAL_SCORE, cfg.decision_threshold)
        outcome = VerdictTuple(verdict=verdict, confidence=confidence,
                               influence_score=TIMELINE_REFUSAL_SCORE,
                               evidence=(meta_claim, gate_claim),
                               trajectory_ref=pair.key)
        trajectory.record(phase=0, action=None,
                          observation={"refused": True, "reason": gate.reason})
        trajectory.outcome = outcome
        if trajectory_sink:
            trajectory_sink(trajectory)
        return outcome

    # phase 1: seed the case file
    if seed_similarity is None:
        seed_similarity, witness = seed_similarity_exact(corpus, ctx.visual_store, pair)
    else:
        witness = None
    seed_claim = EvidenceClaim(kind=ClaimKind.VISUAL_SIMILARITY,
                               score=(float(seed_similarity) + 1.0) / 2.0,
                               payload={"seed_cosine": float(seed_similarity),
                                        "witness": list(witness) if witness else None})
    evidence: list[EvidenceClaim] = [meta_claim, seed_claim]
    provisional = DEFAULT_PROVISIONAL
    trajectory.record(phase=1, action=None,
                      observation={"seed_cosine": float(seed_similarity)})

    # phase 2: investigation loop
    for step in range(1, cfg.max_steps + 1):
        context = serialize_context(tuple(evidence), ROLE_CONTROLLER, pair=pair,
                                    tools=registry.names,
                                    budget_chars=cfg.context_budget_chars)
        request = BackendRequest(role=ROLE_CONTROLLER, pair_key=pair.key, step=step,
                                 context_text=context, tools=registry.names,
                                 evidence=tuple(evidence))
        action = controller.invoke(request)
        if not isinstance(action, AgentAction):
            raise DataError(f"controller returned {type(action).__name__}, expected AgentAction")

        if action.kind == "call":
            try:
                record = registry.invoke(action.tool, pair, **dict(action.args))
            except (ToolFailure, DataError, TypeError) as exc:
                # a bad tool name or bad args is the backend's mistake, not fatal
                failure = EvidenceClaim(kind=ClaimKind.TOOL_FAILURE, score=0.0,
                                        payload={"error": str(exc)}, source_tool=action.tool)
                evidence.append(failure)
                trajectory.record(phase=2, action=action,
                                  observation={"tool_failure": str(exc)})
                continue
            evidence.extend(record.claims)
            trajectory.record(phase=2, action=action,
                              observation={"tool": record.tool,
                                           "summary_score": record.summary_score})
        elif action.kind == "conclude":
            if action.score is None or action.verdict is None:
                raise DataError("conclude action without verdict or score")
            provisional = (action.verdict, min(1.0, max(0.0, float(action.score))))
            trajectory.record(phase=2, action=action,
                              observation={"provisional": [provisional[0].value, provisional[1]]})
            break
        elif action.kind == "note":
            trajectory.record(phase=2, action=action, observation=None)
        else:
            raise DataError(f"unknown action kind {action.kind!r}")

    # phase 3: falsification
    report = falsify(provisional, tuple(evidence), critic, cfg, pair=pair,
                     step=len(trajectory.steps) + 1)
    challenge = EvidenceClaim(kind=ClaimKind.CRITIC_CHALLENGE, score=report.final_score,
                              payload={
                                  "p_intermediary": report.response.p_intermediary,
                                  "p_convergence": report.response.p_convergence,
                                  "p_common_source": report.response.p_common_source,
                                  "rationales": list(report.response.rationales),
                                  "penalty": report.penalty,
                                  "provisional_score": report.provisional_score,
                              })
    evidence.append(challenge)
    trajectory.record(phase=3, action=None, observation={
        "penalty": report.penalty, "final_score": report.final_score})

    # phase 4: derive the verdict from the post-critic score
    verdict, confidence = derive_verdict(report.final_score, cfg.decision_threshold)
    outcome = VerdictTuple(verdict=verdict, confidence=confidence,
                           influence_score=report.final_score,
                           evidence=tuple(evidence), trajectory_ref=pair.key)
    trajectory.outcome = outcome
    if trajectory_sink:
        trajectory_sink(trajectory)
    return outcome
