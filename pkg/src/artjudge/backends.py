"""Reasoning backends: who answers when the adjudication loop asks.

Three kinds share one contract (`invoke(BackendRequest)`):

* scripted backends replay a fixed table keyed by (pair, step) and raise on
  any context their script does not cover - the deterministic test double;
* heuristic backends implement a fixed policy over the structured evidence
  (call every available tool once, conclude on the mean summary; critic
  scores counter-hypotheses from evidence gaps), giving the benchmark a
  fully offline yet non-trivial player;
* the remote backend POSTs role prompts to an HTTP chat endpoint configured
  through environment variables, with capped-backoff retries and a single
  format-reminder retry on unparseable replies.

Controllers answer with an AgentAction; critics with a CriticResponse.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Mapping

from .config import RemoteConfig
from .core import ClaimKind, EvidenceClaim, Verdict
from .errors import (
    BackendError,
    DataError,
    ParseError,
    RateLimitError,
    TransportError,
    UnscriptedContextError,
)
from .tools import CANONICAL_TOOL_ORDER, TOOL_BIOGRAPHY, TOOL_CONCEPT, TOOL_STYLE, TOOL_TIMELINE, TOOL_VISUAL

logger = logging.getLogger(__name__)

ROLE_CONTROLLER = "controller"
ROLE_CRITIC = "critic"


@dataclass(frozen=True)
class AgentAction:
    """One controller utterance: call a tool, conclude, or just think."""

    kind: str                      # "call" | "conclude" | "note"
    tool: str | None = None
    args: Mapping[str, object] = field(default_factory=dict)
    verdict: Verdict | None = None
    score: float | None = None
    thought: str = ""

    @staticmethod
    def call(tool: str, args: Mapping[str, object] | None = None, thought: str = "") -> "AgentAction":
        return AgentAction(kind="call", tool=tool, args=args or {}, thought=thought)

    @staticmethod
    def conclude(verdict: Verdict, score: float, thought: str = "") -> "AgentAction":
        return AgentAction(kind="conclude", verdict=verdict, score=score, thought=thought)

    @staticmethod
    def note(thought: str) -> "AgentAction":
        return AgentAction(kind="note", thought=thought)

    def to_json(self) -> dict[str, object]:
        return {"kind": self.kind, "tool": self.tool, "args": dict(self.args),
                "verdict": self.verdict.value if self.verdict else None,
                "score": self.score, "thought": self.thought}


@dataclass(frozen=True)
class CriticResponse:
    """Counter-hypothesis plausibilities: intermediary, convergence, common source."""

    p_intermediary: float
    p_convergence: float
    p_common_source: float
    rationales: tuple[str, str, str] = ("", "", "")

    def clamped(self) -> "CriticResponse":
        def clamp(name: str, value: float) -> float:
            if not 0.0 <= value <= 1.0:
                logger.warning("critic %s=%.4f outside [0,1]; clamping", name, value)
                return min(1.0, max(0.0, value))
            return value

        return CriticResponse(
            p_intermediary=clamp("p_intermediary", self.p_intermediary),
            p_convergence=clamp("p_convergence", self.p_convergence),
            p_common_source=clamp("p_common_source", self.p_common_source),
            rationales=self.rationales,
        )


@dataclass(frozen=True)
class BackendRequest:
    """What a backend sees for one invocation.

    `context_text` is the serialized case file (the only thing a remote
    backend reads); scripted and heuristic backends may also use the pair
    key, step counter, available tool names, and structured evidence.
    """

    role: str
    pair_key: str
    step: int
    context_text: str
    tools: tuple[str, ...] = ()
    provisional: tuple[Verdict, float] | None = None
    evidence: tuple[EvidenceClaim, ...] = ()


class Backend:
    """Interface: subclasses set `role`/`name` and implement invoke()."""

    role: str = ""
    name: str = ""
    deterministic: bool = True

    def invoke(self, request: BackendRequest):
        raise NotImplementedError


class ScriptedController(Backend):
    """Replays an explicit action table keyed by (pair_key, step)."""

    role = ROLE_CONTROLLER
    name = "scripted"

    def __init__(self, script: Mapping[tuple[str, int], AgentAction]):
        self.script = dict(script)
        self.invocations: list[BackendRequest] = []

    def invoke(self, request: BackendRequest) -> AgentAction:
        self.invocations.append(request)
        key = (request.pair_key, request.step)
        if key not in self.script:
            raise UnscriptedContextError(f"no scripted action for {key}")
        return self.script[key]


class ScriptedCritic(Backend):
    """Replays fixed counter-hypothesis scores keyed by pair."""

    role = ROLE_CRITIC
    name = "scripted"

    def __init__(self, table: Mapping[str, tuple[float, float, float]],
                 default: tuple[float, float, float] | None = None):
        self.table = dict(table)
        self.default = default
        self.invocations: list[BackendRequest] = []

    def invoke(self, request: BackendRequest) -> CriticResponse:
        self.invocations.append(request)
        scores = self.table.get(request.pair_key, self.default)
        if scores is None:
            raise UnscriptedContextError(f"no scripted critic scores for {request.pair_key!r}")
        return CriticResponse(*scores).clamped()


def _tool_scores(evidence: tuple[EvidenceClaim, ...]) -> dict[str, float]:
    """Latest summary score per tool from the structured evidence."""
    out: dict[str, float] = {}
    for claim in evidence:
        if claim.source_tool and claim.kind is not ClaimKind.TOOL_FAILURE:
            out[claim.source_tool] = claim.score
    return out


def _seed_similarity(evidence: tuple[EvidenceClaim, ...]) -> float | None:
    for claim in evidence:
        if claim.kind is ClaimKind.VISUAL_SIMILARITY and claim.source_tool is None:
            return claim.score
    return None


class HeuristicController(Backend):
    """Fixed investigation policy: probe everything once, then average.

    Calls each available tool exactly once in canonical order (skipping any
    that already produced a record or a failure), then concludes with the
    mean of the tool summary scores. Stateless across steps: the decision is
    re-derived from the evidence, so tool failures cannot wedge the loop.
    """

    role = ROLE_CONTROLLER
    name = "heuristic"

    def __init__(self) -> None:
        self.invocations: list[BackendRequest] = []

    def invoke(self, request: BackendRequest) -> AgentAction:
        self.invocations.append(request)
        attempted = {c.source_tool for c in request.evidence if c.source_tool}
        for tool in CANONICAL_TOOL_ORDER:
            if tool in request.tools and tool not in attempted:
                return AgentAction.call(tool)
        scores = _tool_scores(request.evidence)
        if scores:
            score = sum(scores.values()) / len(scores)
        else:
            score = 0.5
        verdict = Verdict.YES if score > 0.5 else Verdict.NO
        return AgentAction.conclude(verdict, score)


class HeuristicCritic(Backend):
    """Scores counter-hypotheses from evidence gaps.

    The shared intuition: similarity that no documented pathway explains is
    exactly what the alternative hypotheses predict. Convergence tracks the
    visual-vs-pathway gap, common source the conceptual-vs-pathway gap, and
    the intermediary reading grows when pathways are undocumented at all.
    """

    role = ROLE_CRITIC
    name = "heuristic"

    def __init__(self) -> None:
        self.invocations: list[BackendRequest] = []

    def invoke(self, request: BackendRequest) -> CriticResponse:
        self.invocations.append(request)
        scores = _tool_scores(request.evidence)
        seed = _seed_similarity(request.evidence)
        visual = scores.get(TOOL_VISUAL, seed if seed is not None else 0.5)
        pathway = scores.get(TOOL_BIOGRAPHY, 0.0)
        concept = scores.get(TOOL_CONCEPT, 0.0)
        style = scores.get(TOOL_STYLE, 0.5)
        timeline = scores.get(TOOL_TIMELINE, 1.0)

        p_intermediary = max(0.0, min(1.0, 0.25 * (1.0 - pathway) * timeline))
        p_convergence = max(0.0, min(1.0, 0.5 * (visual + style) - pathway))
        p_common = max(0.0, min(1.0, 0.8 * (concept - pathway)))
        return CriticResponse(
            p_intermediary=p_intermediary,
            p_convergence=p_convergence,
            p_common_source=p_common,
            rationales=(
                f"undocumented pathway leaves room for an intermediary (pathway={pathway:.2f})",
                f"visual/style affinity {0.5 * (visual + style):.2f} vs pathway {pathway:.2f}",
                f"conceptual overlap {concept:.2f} vs pathway {pathway:.2f}",
            ),
        )


# ---------------------------------------------------------------------------
# remote backend
# ---------------------------------------------------------------------------

_FORMAT_REMINDER = (
    "\n\nREMINDER: your previous reply was not valid JSON for this protocol. "
    "Respond with exactly one JSON object as specified, with no surrounding text.")


def _default_template(role: str) -> str:
    from importlib import resources

    name = "controller.txt" if role == ROLE_CONTROLLER else "critic.txt"
    return resources.files("artjudge.data.prompts").joinpath(name).read_text(encoding="utf-8")


@dataclass
class RemoteEndpoint:
    url: str
    model: str
    api_key: str

    @staticmethod
    def from_env(config: RemoteConfig) -> "RemoteEndpoint":
        url = os.environ.get(config.url_env, "")
        if not url:
            raise BackendError(f"remote backend needs {config.url_env} set")
        return RemoteEndpoint(url=url,
                              model=os.environ.get(config.model_env, "default"),
                              api_key=os.environ.get(config.key_env, ""))


class RemoteBackend(Backend):
    """HTTP chat backend with retries and strict response parsing.

    Transport failures, 5xx, and 429 retry with capped exponential backoff;
    429 exhaustion raises RateLimitError. A reply that fails to parse gets
    exactly one retry with a format reminder appended, then ParseError.
    Out-of-range critic probabilities are clamped with a warning rather than
    rejected.
    """

    deterministic = False

    def __init__(self, role: str, endpoint: RemoteEndpoint,
                 config: RemoteConfig | None = None,
                 template: str | None = None, session=None):
        if role not in (ROLE_CONTROLLER, ROLE_CRITIC):
            raise DataError(f"unknown backend role {role!r}")
        self.role = role
        self.name = "remote"
        self.endpoint = endpoint
        self.config = config or RemoteConfig()
        self.template = template if template is not None else _default_template(role)
        if "{context}" not in self.template:
            raise DataError("role template must contain a {context} placeholder")
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    # -- transport ----------------------------------------------------------

    def _post(self, prompt: str) -> str:
        import requests

        cfg = self.config
        headers = {"Content-Type": "application/json"}
        if self.endpoint.api_key:
            headers["Authorization"] = f"Bearer {self.endpoint.api_key}"
        body = {
            "model": self.endpoint.model,
            "temperature": 0.0,
            "messages": [{"role": "user", "content": prompt}],
        }
        last: Exception | None = None
        saw_rate_limit = False
        for attempt in range(cfg.max_attempts):
            if attempt:
                time.sleep(min(cfg.backoff_cap, cfg.backoff_base * (2 ** (attempt - 1))))
            try:
                resp = self.session.post(self.endpoint.url, json=body,
                                         headers=headers, timeout=cfg.timeout)
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code == 429:
                saw_rate_limit = True
                last = TransportError("rate limited (429)")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected status {resp.status_code}: {resp.text[:200]}")
            try:
                doc = resp.json()
                return doc["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ParseError(f"malformed completion envelope: {exc}") from None
        if saw_rate_limit:
            raise RateLimitError(f"still rate limited after {cfg.max_attempts} attempts")
        raise TransportError(f"transport failed after {cfg.max_attempts} attempts: {last}")

    # -- parsing ------------------------------------------------------------

    def _parse_controller(self, content: str) -> AgentAction:
        doc = json.loads(content)
        action = doc.get("action")
        if action == "call":
            tool = doc.get("tool")
            if not isinstance(tool, str) or not tool:
                raise ValueError("call without tool name")
            args = doc.get("args") or {}
            if not isinstance(args, dict):
                raise ValueError("args must be an object")
            return AgentAction.call(tool, args, thought=str(doc.get("thought", "")))
        if action == "conclude":
            verdict = Verdict(str(doc.get("verdict", "")).upper())
            score = float(doc["score"])
            if not 0.0 <= score <= 1.0:
                logger.warning("controller score %.4f outside [0,1]; clamping", score)
                score = min(1.0, max(0.0, score))
            return AgentAction.conclude(verdict, score, thought=str(doc.get("thought", "")))
        raise ValueError(f"unknown action {action!r}")

    def _parse_critic(self, content: str) -> CriticResponse:
        doc = json.loads(content)
        rationales = doc.get("rationales") or ["", "", ""]
        if not isinstance(rationales, list) or len(rationales) != 3:
            rationales = ["", "", ""]
        return CriticResponse(
            p_intermediary=float(doc["p2"]),
            p_convergence=float(doc["p3"]),
            p_common_source=float(doc["p4"]),
            rationales=tuple(str(r) for r in rationales),
        ).clamped()

    def invoke(self, request: BackendRequest):
        prompt = self.template.replace("{context}", request.context_text)
        content = self._post(prompt)
        for attempt in (0, 1):
            try:
                if self.role == ROLE_CONTROLLER:
                    return self._parse_controller(content)
                return self._parse_critic(content)
            except (ValueError, KeyError, TypeError) as exc:
                if attempt == 1:
                    raise ParseError(f"unparseable {self.role} reply after retry: {exc}") from None
                logger.warning("unparseable %s reply (%s); retrying with format reminder",
                               self.role, exc)
                content = self._post(prompt + _FORMAT_REMINDER)
        raise ParseError("unreachable")  # pragma: no cover


def make_backends(kind: str, remote_config: RemoteConfig | None = None
                  ) -> tuple[Backend, Backend]:
    """(controller, critic) pair for a named backend kind."""
    if kind == "heuristic":
        return HeuristicController(), HeuristicCritic()
    if kind == "remote":
        cfg = remote_config or RemoteConfig()
        endpoint = RemoteEndpoint.from_env(cfg)
        return (RemoteBackend(ROLE_CONTROLLER, endpoint, cfg),
                RemoteBackend(ROLE_CRITIC, endpoint, cfg))
    raise DataError(f"unknown backend kind {kind!r} (expected 'heuristic' or 'remote')")
