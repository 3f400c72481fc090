import json
import random

import pytest

from maad.agents import AdversarialBackend
from maad.artifacts import PackageVerdict, package_digest
from maad.common import (
    AlreadyAnswered,
    EmptyJournal,
    CorruptJournal,
    EmptySrs,
    InvalidConfig,
    InvalidState,
    TerminalState,
    UnknownQuestion,
)
from maad.orchestrator import (
    EventKind,
    Phase,
    SessionConfig,
    replay,
    run_to_completion,
    stakeholder_reject,
    start_session,
    step,
    submit_clarification_answer,
)

SRS = "The system lets users run its core feature quickly and reliably."

DESIGN_MISMATCH = {"description": "design misses a corner", "severity": 3, "stage": "design"}


def fenced(payload):
    return "```json\n" + json.dumps(payload) + "\n```"


class OverrideBackend:
    """Adversarial backend with per-(role, nth-call) raw-text overrides."""

    def __init__(self, overrides=None, judged_rounds=()):
        self.inner = AdversarialBackend(judged_rounds)
        self.overrides = overrides or {}
        self.role_calls = {}

    def complete(self, prompt, params, task_ref):
        n = self.role_calls.get(task_ref.role.value, 0)
        self.role_calls[task_ref.role.value] = n + 1
        override = self.overrides.get((task_ref.role.value, n))
        if override is not None:
            return override
        return self.inner.complete(prompt, params, task_ref)


PENDING_ANALYST = {
    "requirements": [
        {"id": "R-001", "text": "core feature", "kind": "functional", "source_span": [0, 10],
         "attributes": [], "status": "active"}
    ],
    "asr_tags": [],
    "risk_flags": [
        {"id": "RISK-001", "kind": "ambiguity", "affected_requirement_ids": ["R-001"],
         "description": "feature scope unclear", "resolution": "open"}
    ],
    "clarifications": [
        {"question_id": "Q-001", "risk_id": "RISK-001", "question": "Which feature exactly?", "status": "pending"}
    ],
    "grounding": [],
}

RESOLVED_ANALYST = {
    "requirements": PENDING_ANALYST["requirements"],
    "asr_tags": [],
    "risk_flags": [
        {"id": "RISK-001", "kind": "ambiguity", "affected_requirement_ids": ["R-001"],
         "description": "feature scope unclear", "resolution": "clarified"}
    ],
    "clarifications": [
        {"question_id": "Q-001", "risk_id": "RISK-001", "question": "Which feature exactly?",
         "answer": "the search feature", "status": "answered"}
    ],
    "grounding": [],
}


class TestStartSession:
    def test_empty_srs(self):
        with pytest.raises(EmptySrs):
            start_session("   ", SessionConfig())

    def test_fresh_session_state(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        assert session.phase is Phase.ANALYSIS
        assert session.round_count == 0
        assert len(session.journal) == 1
        assert session.journal[0].kind is EventKind.SESSION_STARTED

    def test_zero_max_rounds_rejected(self):
        with pytest.raises(InvalidConfig):
            start_session(SRS, SessionConfig(max_rounds=0))


class TestPipeline:
    def test_happy_path_confirms_in_one_round(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        package = run_to_completion(session)
        assert session.phase is Phase.CONFIRMED
        assert package.verdict is PackageVerdict.CONFIRMED
        assert package.round_count == 1
        kinds = [e.kind for e in session.journal]
        assert kinds[0] is EventKind.SESSION_STARTED
        assert kinds[-1] is EventKind.SESSION_CONFIRMED
        assert kinds.count(EventKind.EVALUATION_COMPLETED) == 1
        assert kinds.count(EventKind.AGENT_TASK_STARTED) == 4

    def test_step_in_modeling_returns_modeler_completion(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        step(session)  # analyst
        assert session.phase is Phase.MODELING
        event = step(session)
        assert event.kind is EventKind.AGENT_TASK_COMPLETED
        assert event.payload["role"] == "modeler"
        assert session.phase is Phase.DESIGN

    def test_clean_evaluation_returns_session_confirmed(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        for _ in range(3):
            step(session)
        assert session.phase is Phase.EVALUATION
        event = step(session)
        assert event.kind is EventKind.SESSION_CONFIRMED
        assert session.phase is Phase.CONFIRMED

    def test_step_on_terminal_raises(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        run_to_completion(session)
        with pytest.raises(TerminalState):
            step(session)

    def test_upstream_invalidation_after_refine_analysis(self):
        judged = [[{"description": "requirements misread", "severity": 3, "stage": "analysis"}], []]
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend(judged))
        for _ in range(4):
            step(session)
        assert session.phase is Phase.REFINE_ANALYSIS
        step(session)  # analyst re-run wipes downstream artifacts
        assert session.phase is Phase.MODELING
        assert session.package.adrs == ()
        assert session.package.class_model.classes == ()
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED
        assert package.adrs != ()  # rebuilt, not reused
        roles = [e.payload["role"] for e in session.journal if e.kind is EventKind.AGENT_TASK_COMPLETED]
        assert roles == ["analyst", "modeler", "designer", "evaluator", "analyst", "modeler", "designer", "evaluator"]

    def test_refine_modeling_reruns_only_downstream_of_modeler(self):
        judged = [[{"description": "views are wrong", "severity": 3, "stage": "modeling"}], []]
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend(judged))
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED
        roles = [e.payload["role"] for e in session.journal if e.kind is EventKind.AGENT_TASK_COMPLETED]
        assert roles == ["analyst", "modeler", "designer", "evaluator", "modeler", "designer", "evaluator"]

    def test_always_mismatching_evaluator_aborts_at_round_cap(self):
        session = start_session(
            SRS, SessionConfig(max_rounds=5), backend=AdversarialBackend([[DESIGN_MISMATCH]] * 5)
        )
        package = run_to_completion(session)
        assert session.phase is Phase.ABORTED
        assert package.verdict is PackageVerdict.ABORTED
        kinds = [e.kind for e in session.journal]
        assert kinds.count(EventKind.EVALUATION_COMPLETED) == 5
        assert kinds[-1] is EventKind.SESSION_ABORTED
        assert session.round_count == 5

    def test_max_rounds_one_aborts_immediately_on_any_mismatch(self):
        session = start_session(
            SRS, SessionConfig(max_rounds=1), backend=AdversarialBackend([[DESIGN_MISMATCH]])
        )
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.ABORTED
        assert session.round_count == 1

    def test_repair_loop_recovers_from_one_bad_reply(self):
        backend = OverrideBackend(overrides={("modeler", 0): "not a fenced reply"})
        session = start_session(SRS, SessionConfig(), backend=backend)
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED
        completed = [e for e in session.journal if e.kind is EventKind.AGENT_TASK_COMPLETED]
        assert next(e for e in completed if e.payload["role"] == "modeler").payload["attempts"] == 2

    def test_invalid_agent_output_aborts_with_cause(self):
        overrides = {("modeler", n): "not a fenced reply" for n in range(3)}
        session = start_session(SRS, SessionConfig(), backend=OverrideBackend(overrides=overrides))
        run_to_completion(session)
        assert session.phase is Phase.ABORTED
        assert "modeler" in session.abort_cause

    def test_mismatches_below_threshold_confirm(self):
        judged = [[{"description": "cosmetic nit", "severity": 1, "stage": "design"}]]
        session = start_session(SRS, SessionConfig(severity_threshold=2), backend=AdversarialBackend(judged))
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED


class TestClarificationGate:
    def interactive_session(self):
        backend = OverrideBackend(
            overrides={("analyst", 0): fenced(PENDING_ANALYST), ("analyst", 1): fenced(RESOLVED_ANALYST)}
        )
        session = start_session(SRS, SessionConfig(interactive=True), backend=backend)
        step(session)
        return session

    def test_blocks_until_answered(self):
        session = self.interactive_session()
        assert session.phase is Phase.AWAIT_CLARIFICATION
        for _ in range(3):
            assert step(session) is None  # refuses to advance toward MODELING
        assert session.phase is Phase.AWAIT_CLARIFICATION
        assert any(e.kind is EventKind.CLARIFICATION_ASKED for e in session.journal)

    def test_unknown_question(self):
        session = self.interactive_session()
        with pytest.raises(UnknownQuestion):
            submit_clarification_answer(session, "Q-404", "answer")

    def test_answer_outside_await_phase(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        step(session)
        assert session.phase is Phase.MODELING
        with pytest.raises(InvalidState):
            submit_clarification_answer(session, "Q-001", "answer")

    def test_double_answer_rejected(self):
        backend = OverrideBackend(
            overrides={
                ("analyst", 0): fenced(
                    dict(
                        PENDING_ANALYST,
                        clarifications=PENDING_ANALYST["clarifications"]
                        + [{"question_id": "Q-002", "risk_id": "RISK-001", "question": "more?", "status": "pending"}],
                    )
                )
            }
        )
        session = start_session(SRS, SessionConfig(interactive=True), backend=backend)
        step(session)
        submit_clarification_answer(session, "Q-001", "the search feature")
        assert session.phase is Phase.AWAIT_CLARIFICATION  # Q-002 still pending
        with pytest.raises(AlreadyAnswered):
            submit_clarification_answer(session, "Q-001", "again")

    def test_last_answer_returns_to_analysis_and_completes(self):
        session = self.interactive_session()
        submit_clarification_answer(session, "Q-001", "the search feature")
        assert session.phase is Phase.ANALYSIS
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED
        assert any(e.kind is EventKind.CLARIFICATION_ANSWERED for e in session.journal)
        # the clarified re-run consumed the second analyst file (same key, repeat call)
        roles = [e.payload["role"] for e in session.journal if e.kind is EventKind.AGENT_TASK_COMPLETED]
        assert roles.count("analyst") == 2


class TestTerminationProperty:
    def test_randomized_adversarial_sessions_respect_the_bounds(self):
        rng = random.Random(1234)
        for _ in range(40):
            max_rounds = rng.randint(1, 6)
            judged_rounds = []
            for _ in range(max_rounds):
                judged_rounds.append(
                    [
                        {
                            "description": f"issue {rng.randint(0, 10 ** 6)}",
                            "severity": rng.randint(1, 4),
                            "stage": rng.choice(["analysis", "modeling", "design", None]),
                        }
                        for _ in range(rng.randint(0, 3))
                    ]
                )
            config = SessionConfig(max_rounds=max_rounds, severity_threshold=rng.randint(1, 4))
            session = start_session(SRS, config, backend=AdversarialBackend(judged_rounds))
            rounds_seen = []
            session.on_event.append(lambda e, line: rounds_seen.append(session.round_count))
            run_to_completion(session)
            assert session.is_terminal
            kinds = [e.kind for e in session.journal]
            assert kinds.count(EventKind.EVALUATION_COMPLETED) <= max_rounds
            assert kinds.count(EventKind.AGENT_TASK_STARTED) <= config.task_budget
            assert rounds_seen == sorted(rounds_seen)  # round_count never decreases

    def test_budget_guard_stops_analysis_heavy_sessions(self):
        # six rounds of analysis-routed refinement would need 24 tasks; budget is 22
        judged = [[{"description": f"misread {i}", "severity": 4, "stage": "analysis"}] for i in range(6)]
        session = start_session(SRS, SessionConfig(max_rounds=6), backend=AdversarialBackend(judged))
        run_to_completion(session)
        assert session.phase is Phase.ABORTED
        started = [e for e in session.journal if e.kind is EventKind.AGENT_TASK_STARTED]
        assert len(started) <= SessionConfig(max_rounds=6).task_budget


class TestJournalAndReplay:
    def run_fixture(self, tmp_path=None, judged=([[DESIGN_MISMATCH], []])):
        session = start_session(
            SRS,
            SessionConfig(),
            backend=AdversarialBackend(judged),
            session_dir=tmp_path,
        )
        timeline = []
        session.on_event.append(lambda event, line: timeline.append((event.seq, session.phase)))
        run_to_completion(session)
        return session, timeline

    def test_journal_is_gap_free_and_properly_terminated(self):
        session, _ = self.run_fixture()
        seqs = [e.seq for e in session.journal]
        assert seqs == list(range(1, len(seqs) + 1))
        assert session.journal[0].kind is EventKind.SESSION_STARTED
        assert session.journal[-1].kind in (EventKind.SESSION_CONFIRMED, EventKind.SESSION_ABORTED)

    def test_empty_journal(self):
        with pytest.raises(EmptyJournal):
            replay([])

    def test_gap_is_corrupt(self):
        session, _ = self.run_fixture()
        lines = [e.to_json_line() for e in session.journal]
        del lines[2]
        with pytest.raises(CorruptJournal):
            replay(lines)

    def test_bad_first_event_is_corrupt(self):
        session, _ = self.run_fixture()
        lines = [e.to_json_line() for e in session.journal]
        with pytest.raises(CorruptJournal):
            replay(lines[1:])

    def test_full_replay_reconstructs_digest_and_phase(self):
        session, _ = self.run_fixture()
        lines = [e.to_json_line() for e in session.journal]
        rebuilt = replay(lines)
        assert rebuilt.phase is Phase.CONFIRMED
        assert package_digest(rebuilt.package) == package_digest(session.package)
        assert rebuilt.round_count == session.round_count
        assert [m.id for m in rebuilt.open_mismatches] == [m.id for m in session.open_mismatches]

    def test_every_truncation_matches_the_live_intermediate_phase(self):
        session, timeline = self.run_fixture()
        lines = [e.to_json_line() for e in session.journal]
        # the listener attaches after SessionStarted, whose post-state is ANALYSIS
        phase_after = {1: Phase.ANALYSIS, **{seq: phase for seq, phase in timeline}}
        assert len(phase_after) == len(lines)
        for k in range(1, len(lines) + 1):
            rebuilt = replay(lines[:k])
            assert rebuilt.phase is phase_after[k], f"prefix {k}"

    def test_truncation_after_evaluation_restores_routing_and_mismatches(self):
        session, _ = self.run_fixture()
        lines = [e.to_json_line() for e in session.journal]
        eval_idx = next(
            i for i, e in enumerate(session.journal) if e.kind is EventKind.EVALUATION_COMPLETED
        )
        rebuilt = replay(lines[: eval_idx + 1])
        assert rebuilt.phase is Phase.REFINE_DESIGN
        assert [m.id for m in rebuilt.open_mismatches] == [
            m["id"] for m in session.journal[eval_idx].payload["mismatches"]
            if m["id"] in session.journal[eval_idx].payload["open_mismatch_ids"]
        ]

    def test_journal_file_round_trip(self, tmp_path):
        session, _ = self.run_fixture(tmp_path=tmp_path / "s1")
        raw = (tmp_path / "s1" / "journal.jsonl").read_text(encoding="utf-8")
        rebuilt = replay(raw.splitlines())
        assert package_digest(rebuilt.package) == package_digest(session.package)
        snapshots = sorted(p.name for p in (tmp_path / "s1" / "artifacts").iterdir())
        assert "analysis_0.json" in snapshots
        assert "evaluation_1.json" in snapshots
        assert "refine_design_1.json" in snapshots


class TestStakeholderReject:
    def confirmed_session(self):
        session = start_session(SRS, SessionConfig(), backend=AdversarialBackend())
        run_to_completion(session)
        return session

    def test_reject_reopens_exactly_one_round(self):
        session = self.confirmed_session()
        stakeholder_reject(session, "the deployment needs an edge node")
        assert session.phase is Phase.REFINE_DESIGN
        assert session.package.verdict is PackageVerdict.UNCONFIRMED
        package = run_to_completion(session)
        assert package.verdict is PackageVerdict.CONFIRMED
        assert session.round_count == 2
        with pytest.raises(InvalidState):
            stakeholder_reject(session, "again")

    def test_reject_without_budget(self):
        session = start_session(SRS, SessionConfig(max_rounds=1), backend=AdversarialBackend())
        run_to_completion(session)
        assert session.phase is Phase.CONFIRMED
        with pytest.raises(InvalidState):
            stakeholder_reject(session, "no headroom")

    def test_reject_journal_replays(self):
        session = self.confirmed_session()
        stakeholder_reject(session, "needs work")
        run_to_completion(session)
        rebuilt = replay([e.to_json_line() for e in session.journal])
        assert rebuilt.phase is Phase.CONFIRMED
        assert package_digest(rebuilt.package) == package_digest(session.package)
        assert rebuilt.stakeholder_reject_used
