"""Scripted multi-party scenario runner with per-party visibility matrices.

Scripts are line-oriented; tokens follow shell quoting rules. Grammar:

    # comment / blank line
    parties NAME...                          declare extra user parties
    bootstrap operator=Op providers=P,...    genesis (see PlatformConfig)
              lifecyclers=L,... arbitrators=A,... [date=YYYY-MM-DD]
    clock ISO-TIMESTAMP-OR-DATE              move the ledger clock
    as PARTY[,PARTY...] VERB ARGS [-> label] run a command, bind its result
    expect ERRORCODE as PARTY VERB ARGS      command must fail with that code
    assert-seen LABEL P=S P=O P=W ...        exact visibility row; every
                                             declared party not listed must
                                             not see the contract at all
    assert-active LABEL true|false
    assert-field LABEL dotted.path JSON      payload field equality

Command verbs: propose, accept, decline, withdraw, approve, create-mi,
submit-assessment, accept-assessment, reject-assessment,
request-arbitrators, invoke-arbitrators, accept-invite, confirm,
create-poll, vote, finalize, advance, process, and the generic
`create TEMPLATE field=value...` / `exercise LABEL CHOICE field=value...`.
Values: `$label` dereferences a bound contract id, comma-separated values
form lists (`a,` for a one-element list, `[]` for empty), dotted keys
build nested objects.

A failing command is reported and the run continues; assertion outcomes
and the full label-by-party S/O/W matrix land in the report.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field
from typing import Optional

from . import maintenance, rental, rentcollect
from .ledger import Create, Exercise, LedgerEngine, LedgerError, ManualClock
from .platform import Platform, PlatformConfig, bootstrap

DEFAULT_CLOCK_START = "2024-05-01T08:00:00Z"


class ScenarioParseError(Exception):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Step:
    lineno: int
    text: str
    kind: str  # parties | bootstrap | clock | command | expect | assert
    actor: Optional[tuple] = None
    verb: Optional[str] = None
    args: list = field(default_factory=list)
    kwargs: dict = field(default_factory=dict)
    label: Optional[str] = None
    expect_code: Optional[str] = None


@dataclass
class StepResult:
    lineno: int
    text: str
    ok: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"line": self.lineno, "text": self.text, "ok": self.ok, "detail": self.detail}


@dataclass
class ScenarioReport:
    steps: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    matrix: dict = field(default_factory=dict)  # label -> party -> S|O|W|-
    labels: dict = field(default_factory=dict)  # label -> contract id

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.steps) and all(a.ok for a in self.assertions)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "steps": [s.to_json() for s in self.steps],
            "assertions": [a.to_json() for a in self.assertions],
            "matrix": self.matrix,
            "labels": self.labels,
        }


# --- parsing -----------------------------------------------------------------


def parse_script(text: str) -> list:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ScenarioParseError(lineno, f"bad quoting ({exc})")
        if not tokens:
            continue
        head = tokens[0]
        if head == "parties":
            if len(tokens) < 2:
                raise ScenarioParseError(lineno, "parties needs at least one name")
            steps.append(Step(lineno, line, "parties", args=tokens[1:]))
        elif head == "bootstrap":
            steps.append(Step(lineno, line, "bootstrap", kwargs=_kwargs(tokens[1:], lineno)))
        elif head == "clock":
            if len(tokens) != 2:
                raise ScenarioParseError(lineno, "clock takes exactly one timestamp")
            steps.append(Step(lineno, line, "clock", args=[tokens[1]]))
        elif head == "as":
            steps.append(_parse_command(tokens, line, lineno, expect_code=None))
        elif head == "expect":
            if len(tokens) < 4 or tokens[2] != "as":
                raise ScenarioParseError(lineno, "expected: expect CODE as PARTY VERB ...")
            step = _parse_command(tokens[2:], line, lineno, expect_code=tokens[1])
            steps.append(step)
        elif head == "assert-seen":
            if len(tokens) < 3:
                raise ScenarioParseError(lineno, "assert-seen LABEL P=CAP ...")
            caps = {}
            for tok in tokens[2:]:
                if "=" not in tok:
                    raise ScenarioParseError(lineno, f"expected P=CAP, got {tok!r}")
                party, cap = tok.split("=", 1)
                if cap not in ("S", "O", "W", "-"):
                    raise ScenarioParseError(lineno, f"capacity must be S, O, W or -, got {cap!r}")
                caps[party] = cap
            steps.append(Step(lineno, line, "assert", verb="seen", args=[tokens[1]], kwargs=caps))
        elif head == "assert-active":
            if len(tokens) != 3 or tokens[2] not in ("true", "false"):
                raise ScenarioParseError(lineno, "assert-active LABEL true|false")
            steps.append(Step(lineno, line, "assert", verb="active", args=tokens[1:]))
        elif head == "assert-field":
            if len(tokens) != 4:
                raise ScenarioParseError(lineno, "assert-field LABEL dotted.path JSON")
            steps.append(Step(lineno, line, "assert", verb="field", args=tokens[1:]))
        else:
            raise ScenarioParseError(lineno, f"unknown directive {head!r}")
    return steps


def _parse_command(tokens, line, lineno, expect_code) -> Step:
    # tokens: as PARTY VERB ... [-> label]
    if len(tokens) < 3:
        raise ScenarioParseError(lineno, "expected: as PARTY VERB ...")
    actor = tuple(tokens[1].split(","))
    verb = tokens[2]
    rest = tokens[3:]
    label = None
    if "->" in rest:
        idx = rest.index("->")
        if idx != len(rest) - 2:
            raise ScenarioParseError(lineno, "-> label must end the line")
        label = rest[idx + 1]
        rest = rest[:idx]
    args, kwargs = [], {}
    for tok in rest:
        if "=" in tok and not tok.startswith("$"):
            key, value = tok.split("=", 1)
            kwargs[key] = value
        else:
            args.append(tok)
    if expect_code is not None and label is not None:
        raise ScenarioParseError(lineno, "expect steps cannot bind labels")
    return Step(lineno, line, "expect" if expect_code else "command",
                actor=actor, verb=verb, args=args, kwargs=kwargs,
                label=label, expect_code=expect_code)


def _kwargs(tokens, lineno) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScenarioParseError(lineno, f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        out[key] = value
    return out


# --- value coercion ------------------------------------------------------------


def _scalar(value: str, labels: dict):
    if value.startswith("$"):
        name = value[1:]
        if name not in labels:
            raise LedgerError(f"unbound label ${name}")
        return labels[name]
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        return value


def _value(raw: str, labels: dict):
    if raw == "[]":
        return []
    if raw.startswith("[") and raw.endswith("]"):
        raw = raw[1:-1]
        return [_scalar(v, labels) for v in raw.split(",") if v]
    if "," in raw:
        return [_scalar(v, labels) for v in raw.split(",") if v]
    return _scalar(raw, labels)


def _payload(kwargs: dict, labels: dict) -> dict:
    """key=value pairs into a (possibly nested, via dots) JSON object."""
    out: dict = {}
    for key, raw in kwargs.items():
        target = out
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = _value(raw, labels)
    return out


# --- the runner ------------------------------------------------------------------


class ScenarioRunner:
    def __init__(self, clock_start: str = DEFAULT_CLOCK_START, skew: float = 3600.0):
        self.clock = ManualClock(clock_start)
        self.engine = LedgerEngine(clock=self.clock, skew=skew)
        self.platform: Optional[Platform] = None
        self.labels: dict = {}
        self.declared: list = []

    # one entry per verb: (engine, actor-set, positional args, kwargs) -> result
    def _dispatch(self, actor: tuple, verb: str, args: list, kwargs: dict):
        e = self.engine
        single = actor[0]
        deref = lambda name: self.labels[name] if name in self.labels else name  # noqa: E731
        pay = lambda: _payload(kwargs, self.labels)  # noqa: E731

        if verb == "create":
            if not args:
                raise LedgerError("create needs a template name")
            return e.submit(set(actor), Create(args[0], pay())).result
        if verb == "exercise":
            if len(args) < 2:
                raise LedgerError("exercise needs a label and a choice")
            return e.submit(set(actor), Exercise(deref(args[0]), args[1], pay())).result
        if verb == "propose":
            house = {
                "houseId": kwargs["house"],
                "address": kwargs.get("address", ""),
                "landlord": kwargs["landlord"],
            }
            terms = {
                "rent": int(kwargs["rent"]),
                "beginDate": kwargs["begin"],
                "paymentDates": _value(kwargs["pay"], self.labels),
                "numArbitrators": int(kwargs.get("arbitrators", 1)),
            }
            return rental.submit_proposal(e, single, kwargs["landlord"], kwargs["operator"], house, terms)
        if verb == "accept":
            return rental.accept(e, single, deref(args[0]))
        if verb == "decline":
            return rental.decline(e, single, deref(args[0]))
        if verb == "withdraw":
            return rental.withdraw(e, single, deref(args[0]))
        if verb == "approve":
            return rental.approve(e, single, deref(args[0]))
        if verb == "create-mi":
            return maintenance.create_mi(e, single, deref(args[0]), kwargs["description"], kwargs["start"])
        if verb == "submit-assessment":
            return maintenance.submit_assessment(
                e, single, deref(args[0]),
                maintenance.responsibility(int(kwargs["landlord-pct"])), int(kwargs["cost"]),
            )
        if verb == "accept-assessment":
            return maintenance.resolve_mediation(e, single, deref(args[0]), accept=True)
        if verb == "reject-assessment":
            return maintenance.resolve_mediation(e, single, deref(args[0]), accept=False)
        if verb == "request-arbitrators":
            return maintenance.request_roster(e, single)
        if verb == "invoke-arbitrators":
            out = maintenance.invoke_arbitrators(
                e, single, deref(args[0]), deref(args[2]), deref(args[1])
            )
            return out["invite"]
        if verb == "accept-invite":
            return maintenance.accept_invitation(e, single, deref(args[0]))
        if verb == "confirm":
            return maintenance.confirm_attribution(e, single, deref(args[0]))
        if verb == "create-poll":
            return maintenance.create_poll(
                e, single, deref(args[0]), kwargs["details"],
                kwargs["assessed"], kwargs["repaired"], int(kwargs["cost"]),
                maintenance.responsibility(int(kwargs["landlord-pct"])),
            )
        if verb == "vote":
            out = maintenance.cast_vote(
                e, single, deref(args[0]), maintenance.responsibility(int(kwargs["landlord-pct"]))
            )
            return out["poll"]
        if verb == "finalize":
            return maintenance.finalize_votation(e, single, deref(args[0]))
        if verb == "advance":
            if self.platform is None:
                raise LedgerError("advance requires a bootstrap step")
            return rentcollect.advance(e, single, self.platform.operator)["update"]
        if verb == "process":
            if self.platform is None:
                raise LedgerError("process requires a bootstrap step")
            return rentcollect.process_event(e, single, self.platform.operator)
        raise LedgerError(f"unknown verb {verb!r}")

    def run(self, steps: list) -> ScenarioReport:
        report = ScenarioReport()
        for step in steps:
            if step.kind == "parties":
                self.engine.register_party(*step.args)
                self.declared.extend(p for p in step.args if p not in self.declared)
                report.steps.append(StepResult(step.lineno, step.text, True))
            elif step.kind == "bootstrap":
                cfg = self._bootstrap_config(step.kwargs)
                self.platform = bootstrap(self.engine, cfg)
                for p in (cfg.operator, *cfg.providers, *cfg.lifecyclers, *cfg.arbitrators):
                    if p not in self.declared:
                        self.declared.append(p)
                report.steps.append(StepResult(step.lineno, step.text, True))
            elif step.kind == "clock":
                self.clock.set(step.args[0])
                report.steps.append(StepResult(step.lineno, step.text, True))
            elif step.kind == "command":
                try:
                    result = self._dispatch(step.actor, step.verb, step.args, step.kwargs)
                except LedgerError as exc:
                    report.steps.append(
                        StepResult(step.lineno, step.text, False, f"{exc.code}: {exc}")
                    )
                else:
                    if step.label is not None:
                        self.labels[step.label] = self._labelled(result)
                    report.steps.append(StepResult(step.lineno, step.text, True))
            elif step.kind == "expect":
                try:
                    self._dispatch(step.actor, step.verb, step.args, step.kwargs)
                except LedgerError as exc:
                    if exc.code == step.expect_code:
                        report.steps.append(StepResult(step.lineno, step.text, True, exc.code))
                    else:
                        report.steps.append(
                            StepResult(step.lineno, step.text, False,
                                       f"expected {step.expect_code}, got {exc.code}: {exc}")
                        )
                else:
                    report.steps.append(
                        StepResult(step.lineno, step.text, False,
                                   f"expected {step.expect_code}, but the command succeeded")
                    )
            elif step.kind == "assert":
                report.assertions.append(self._check(step))
            else:  # pragma: no cover - parser only emits the kinds above
                raise ScenarioParseError(step.lineno, f"unknown step kind {step.kind}")
        report.labels = dict(self.labels)
        report.matrix = visibility_matrix(self.engine, self.declared, self.labels)
        return report

    @staticmethod
    def _labelled(result) -> str:
        """Contract id to bind for a step result."""
        if isinstance(result, str):
            return result
        if isinstance(result, dict):
            for key in ("poll", "invite", "update", "miReport"):
                if key in result and isinstance(result[key], str):
                    return result[key]
        if isinstance(result, list) and result and isinstance(result[0], str):
            return result[0]
        return ""

    def _bootstrap_config(self, kwargs: dict) -> PlatformConfig:
        data: dict = {}
        if "operator" in kwargs:
            data["operator"] = kwargs["operator"]
        for name in ("providers", "lifecyclers", "arbitrators", "users"):
            if name in kwargs:
                data[name] = [p for p in kwargs[name].split(",") if p]
        if "date" in kwargs:
            data["initial_date"] = kwargs["date"]
        return PlatformConfig.from_dict(data)

    def _check(self, step: Step) -> StepResult:
        label = step.args[0]
        cid = self.labels.get(label)
        if cid is None:
            return StepResult(step.lineno, step.text, False, f"unbound label {label!r}")
        if step.verb == "seen":
            row = _matrix_row(self.engine, self.declared, cid)
            expected = {p: step.kwargs.get(p, "-") for p in self.declared}
            unknown = set(step.kwargs) - set(self.declared)
            if unknown:
                return StepResult(step.lineno, step.text, False,
                                  f"assertion names undeclared parties {sorted(unknown)}")
            if row == expected:
                return StepResult(step.lineno, step.text, True)
            diff = {p: f"{expected[p]}!={row[p]}" for p in expected if expected[p] != row[p]}
            return StepResult(step.lineno, step.text, False, f"visibility mismatch: {diff}")
        if step.verb == "active":
            want = step.args[1] == "true"
            have = self.engine.is_active(cid)
            if want == have:
                return StepResult(step.lineno, step.text, True)
            return StepResult(step.lineno, step.text, False,
                              f"expected active={want}, found active={have}")
        if step.verb == "field":
            path, expected_raw = step.args[1], step.args[2]
            try:
                expected = json.loads(expected_raw)
            except json.JSONDecodeError:
                expected = expected_raw
            value = self.engine.fetch(cid).payload
            for part in path.split("."):
                if not isinstance(value, dict) or part not in value:
                    return StepResult(step.lineno, step.text, False, f"no field {path!r}")
                value = value[part]
            if value == expected:
                return StepResult(step.lineno, step.text, True)
            return StepResult(step.lineno, step.text, False, f"{path} = {value!r}, expected {expected!r}")
        return StepResult(step.lineno, step.text, False, f"unknown assertion {step.verb!r}")


def _matrix_row(engine: LedgerEngine, parties, cid: str) -> dict:
    row = {}
    for party in parties:
        cap = "-"
        for ev in engine.project_for(party):
            if ev.kind == "create" and ev.contract_id == cid:
                cap = ev.capacity
                break
        row[party] = cap
    return row


def visibility_matrix(engine: LedgerEngine, parties, labels: dict) -> dict:
    """label -> party -> S|O|W|- for every bound contract."""
    by_party = {}
    for party in parties:
        caps = {}
        for ev in engine.project_for(party):
            if ev.kind == "create" and ev.contract_id not in caps:
                caps[ev.contract_id] = ev.capacity
        by_party[party] = caps
    return {
        label: {party: by_party[party].get(cid, "-") for party in parties}
        for label, cid in labels.items()
    }


def run_file(path, clock_start: str = DEFAULT_CLOCK_START) -> ScenarioReport:
    with open(path, encoding="utf-8") as fh:
        steps = parse_script(fh.read())
    return ScenarioRunner(clock_start=clock_start).run(steps)


def format_report(report: ScenarioReport) -> str:
    lines = []
    for s in report.steps:
        mark = "ok " if s.ok else "FAIL"
        suffix = f"  [{s.detail}]" if s.detail else ""
        lines.append(f"{mark} {s.lineno:>4}  {s.text}{suffix}")
    for a in report.assertions:
        mark = "ok " if a.ok else "FAIL"
        suffix = f"  [{a.detail}]" if a.detail else ""
        lines.append(f"{mark} {a.lineno:>4}  {a.text}{suffix}")
    if report.matrix:
        parties = list(next(iter(report.matrix.values())).keys())
        width = max(len(l) for l in report.matrix) + 2
        lines.append("")
        lines.append(" " * width + "  ".join(f"{p:>12}" for p in parties))
        for label, row in report.matrix.items():
            lines.append(f"{label:<{width}}" + "  ".join(f"{row[p]:>12}" for p in parties))
    lines.append("")
    lines.append("scenario PASSED" if report.ok else "scenario FAILED")
    return "\n".join(lines)
