"""Four-stage agent loop over the action registry.

The annotator derives a concept vocabulary from action descriptions and
tags every manifest. The planner interprets an instruction, picks the goal
action for its verb, and closes format gaps with the shortest conversion
chain over the registry's format graph (breadth-first over format sets,
ties broken by classname). The executor binds arguments from instruction
parameters, then pool values, then per-format defaults, and mutates the
scene. The evaluator renders a deterministic top-down semantic image,
scores per-class IoU against the reference, and runs structural checks;
failed evaluations trigger bounded replanning (two rounds) before the
failing report is surfaced.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from shapely.strtree import STRtree

from .protocol import (
    ActionManifest,
    ActionRegistry,
    DataFormat,
    UnknownAction,
    action_doc,
)
from .raster import ClassGrid, Palette, polygon_mask
from .rng import subsystem_seed
from .scene import SceneObject, SceneState

IOU_THRESHOLD = 0.85
REPLAN_LIMIT = 2
PAINT_ORDER = ["road", "green", "water", "building"]  # later classes draw on top

VERBS = {"generate", "scale", "raise", "recolor", "place", "remove", "set-style", "set-weather"}
_KEYWORDS = {"by", "to", "from", "at", "with"}

COLOR_NAMES = {
    "red": (0.8, 0.1, 0.1),
    "green": (0.1, 0.6, 0.15),
    "blue": (0.15, 0.25, 0.75),
    "white": (0.92, 0.92, 0.92),
    "black": (0.05, 0.05, 0.05),
    "gray": (0.5, 0.5, 0.5),
    "grey": (0.5, 0.5, 0.5),
    "yellow": (0.85, 0.8, 0.1),
    "orange": (0.9, 0.55, 0.1),
    "brown": (0.45, 0.3, 0.18),
}


class AgentError(ValueError):
    pass


class Uninterpretable(AgentError):
    def __init__(self, text: str, reason: str = ""):
        super().__init__(f"cannot interpret instruction '{text}'" + (f": {reason}" if reason else ""))
        self.text = text


class Unsatisfiable(AgentError):
    def __init__(self, target, available):
        super().__init__(f"no conversion chain reaches {target} from {sorted(f.value for f in available)}")
        self.target = target


class ArgumentBindingError(AgentError):
    def __init__(self, param: str):
        super().__init__(f"cannot bind argument '{param}'")
        self.param = param


class ActionFailed(AgentError):
    def __init__(self, classname: str, reason: str):
        super().__init__(f"action '{classname}' failed: {reason}")
        self.classname = classname
        self.reason = reason


# ---------------------------------------------------------------------------
# message pool


@dataclass(frozen=True)
class PoolEntry:
    seq: int
    topic: str
    producer: str
    payload: object


class MessagePool:
    """Append-only shared store; sequence numbers are strictly increasing."""

    def __init__(self):
        self._entries: list[PoolEntry] = []

    def publish(self, topic: str, producer: str, payload) -> PoolEntry:
        entry = PoolEntry(len(self._entries), topic, producer, payload)
        self._entries.append(entry)
        return entry

    def entries(self, topic: str | None = None) -> list[PoolEntry]:
        if topic is None:
            return list(self._entries)
        return [e for e in self._entries if e.topic == topic]

    def clone(self) -> "MessagePool":
        twin = MessagePool()
        twin._entries = list(self._entries)  # entries are immutable
        return twin

    def __len__(self):
        return len(self._entries)


# ---------------------------------------------------------------------------
# instructions


@dataclass
class Instruction:
    text: str
    verb: str = ""
    selector: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise Uninterpretable(self.text or "", "empty")


@dataclass
class GuidanceDoc:
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise AgentError("guidance document must be non-empty")


def parse_instruction(text: str) -> Instruction:
    """Rule-based grammar: <verb> <class|object-name> [by N[%]] [to value].

    Extra prepositional phrases (from ..., at x y, with ...) are recorded
    as parameters or modifiers.
    """
    if not text or not text.strip():
        raise Uninterpretable(text or "", "empty")
    tokens = text.strip().split()
    verb = tokens[0].lower()
    if verb not in VERBS:
        raise Uninterpretable(text, f"unknown verb '{verb}'")
    i = 1
    selector: list[str] = []
    while i < len(tokens) and tokens[i].lower() not in _KEYWORDS:
        selector.append(tokens[i])
        i += 1
    params: dict = {}
    while i < len(tokens):
        kw = tokens[i].lower()
        i += 1
        vals: list[str] = []
        while i < len(tokens) and tokens[i].lower() not in _KEYWORDS:
            vals.append(tokens[i])
            i += 1
        if kw == "by" and vals:
            v = vals[0]
            try:
                if v.endswith("%"):
                    params["percent"] = float(v[:-1])
                else:
                    params["amount"] = float(v)
            except ValueError:
                raise Uninterpretable(text, f"bad quantity '{v}'") from None
        elif kw == "to" and vals:
            params["value"] = " ".join(vals)
        elif kw == "at" and len(vals) >= 2:
            try:
                params["position"] = (float(vals[0]), float(vals[1]))
            except ValueError:
                params.setdefault("modifiers", []).append((kw, " ".join(vals)))
        else:
            params.setdefault("modifiers", []).append((kw, " ".join(vals)))
    sel = " ".join(selector)
    if not sel:
        raise Uninterpretable(text, "missing object")
    return Instruction(text, verb, sel, params)


def parse_color(value: str):
    v = (value or "").strip().lower()
    if v in COLOR_NAMES:
        return COLOR_NAMES[v]
    m = re.fullmatch(r"#?([0-9a-f]{6})", v)
    if m:
        h = m.group(1)
        return tuple(int(h[k : k + 2], 16) / 255.0 for k in (0, 2, 4))
    return None


# ---------------------------------------------------------------------------
# annotator


_GERUND_CONCEPTS = {
    "converting": "conversion",
    "generating": "generation",
    "retrieving": "retrieval",
    "placing": "placement",
    "extracting": "extraction",
    "meshing": "meshing",
}
_CONCEPT_NOUNS = set(_GERUND_CONCEPTS.values())


def _concept_of(token: str) -> str | None:
    t = token.lower()
    if t in _GERUND_CONCEPTS:
        return _GERUND_CONCEPTS[t]
    if t in _CONCEPT_NOUNS:
        return t
    if t.endswith("ing") and len(t) > 4:
        return t
    return None


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z]+", text.lower())


def annotate(registry: ActionRegistry, pool: MessagePool | None = None) -> ActionRegistry:
    """Two-step labeling: derive the concept vocabulary (stems occurring at
    least twice across descriptions and classnames), then tag each manifest
    with every vocabulary concept its description mentions."""
    counts: dict[str, int] = {}
    for m in registry.manifests():
        for tok in _tokens(m.description) + _tokens(m.classname.replace("_", " ")):
            c = _concept_of(tok)
            if c:
                counts[c] = counts.get(c, 0) + 1
    vocabulary = sorted(c for c, n in counts.items() if n >= 2)
    labels: dict[str, list[str]] = {}
    for m in registry.manifests():
        tags = sorted(
            {c for tok in _tokens(m.description) if (c := _concept_of(tok)) in vocabulary}
        )
        m.tags = tags
        labels[m.classname] = tags
    if pool is not None and len(registry):
        pool.publish("labels", "annotator", {"vocabulary": vocabulary, "labels": labels})
    return registry


# ---------------------------------------------------------------------------
# planner


@dataclass
class ActionStep:
    classname: str
    arguments: dict = field(default_factory=dict)
    produced: DataFormat | None = None
    executed: bool = False


@dataclass
class Workflow:
    steps: list[ActionStep] = field(default_factory=list)


def _unbound_formats(manifest: ActionManifest, step: ActionStep) -> set[DataFormat]:
    return {i.format for i in manifest.inputs if i.name not in step.arguments}


def shortest_chain(
    registry: ActionRegistry,
    available: set[DataFormat],
    targets: set[DataFormat],
    dead: set[str] = frozenset(),
) -> list[str]:
    """Breadth-first search over format sets; returns the classname chain.

    Conversions become usable once all their input formats are present;
    among equal-length chains the lexicographically smallest wins. Raises
    Unsatisfiable when no chain reaches the targets.
    """
    missing = set(targets) - set(available)
    if not missing:
        return []
    convs = [m for m in registry.conversions() if m.classname not in dead]
    start = frozenset(available)
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        state, chain = queue.popleft()
        for m in convs:
            if m.input_formats() <= state:
                nxt = frozenset(state | {m.output})
                if nxt in seen:
                    continue
                new_chain = chain + [m.classname]
                if not (set(targets) - nxt):
                    return new_chain
                seen.add(nxt)
                queue.append((nxt, new_chain))
    raise Unsatisfiable(sorted(t.value for t in missing), available)


_GOAL_RULES = [
    ("generate", "building", "building_generation"),
    ("generate", "cube", "cube_generation"),
    ("generate", None, "scene_population"),
    ("scale", None, "scale_object"),
    ("raise", None, "raise_object"),
    ("recolor", None, "recolor_object"),
    ("place", None, "asset_placement"),
    ("remove", None, "remove_object"),
    ("set-style", None, "set_style"),
    ("set-weather", None, "set_weather"),
]


def _goal_classname(instr: Instruction, registry: ActionRegistry) -> str:
    sel = instr.selector.lower()
    for verb, key, classname in _GOAL_RULES:
        if instr.verb == verb and (key is None or key in sel):
            if classname in registry:
                return classname
    raise Uninterpretable(instr.text, f"no registered action for verb '{instr.verb}'")


def _factor_from(instr: Instruction) -> float | None:
    if "percent" in instr.params:
        return 1.0 + instr.params["percent"] / 100.0
    if "amount" in instr.params:
        return float(instr.params["amount"])
    return None


def _goal_arguments(instr: Instruction, classname: str) -> dict:
    args: dict = {}
    factor = _factor_from(instr)
    if classname == "scale_object":
        f = factor if factor is not None else 1.0
        args = {"scale_factor": (f, f, f), "scaled_obj_name": instr.selector}
    elif classname == "raise_object":
        args = {"object_name": instr.selector}
        if factor is not None:
            args["factor"] = factor
        elif "value" in instr.params:
            try:
                args["target_height"] = float(instr.params["value"])
                args["factor"] = 0.0  # ignored when target_height is present
            except ValueError:
                pass
        if "factor" not in args:
            args["factor"] = 1.1
    elif classname == "recolor_object":
        color = parse_color(instr.params.get("value", ""))
        if color is None:
            raise Uninterpretable(instr.text, "recolor needs 'to <color>'")
        args = {"color": color, "object_name": instr.selector}
    elif classname == "remove_object":
        args = {"object_name": instr.selector}
    elif classname == "set_style":
        args = {"style": instr.selector + (" " + instr.params.get("value", "") if instr.params.get("value") else "")}
    elif classname == "set_weather":
        args = {"weather": instr.selector}
    elif classname == "asset_placement":
        if "position" in instr.params:
            args["position"] = instr.params["position"]
    elif classname == "cube_generation":
        if factor is not None:
            args["size"] = factor
        elif "value" in instr.params:
            try:
                args["size"] = float(instr.params["value"])
            except ValueError:
                pass
    return args


def plan_workflow(
    registry: ActionRegistry,
    instruction: Instruction | str,
    guidance: GuidanceDoc | None = None,
    available: set[DataFormat] = frozenset(),
    pool: MessagePool | None = None,
    dead: set[str] = frozenset(),
) -> Workflow:
    """Interpret the instruction, pick its goal action, and prepend the
    shortest conversion chain that makes the goal's inputs available."""
    instr = instruction if isinstance(instruction, Instruction) else parse_instruction(instruction)
    if not instr.verb:
        instr = parse_instruction(instr.text)
    goal_name = _goal_classname(instr, registry)
    goal_manifest = registry.manifest(goal_name)
    goal_step = ActionStep(goal_name, _goal_arguments(instr, goal_name), goal_manifest.output)
    needed = _unbound_formats(goal_manifest, goal_step)
    chain = shortest_chain(registry, set(available), needed, dead)
    steps = []
    for classname in chain:
        m = registry.manifest(classname)
        steps.append(ActionStep(classname, {}, m.output))
    steps.append(goal_step)
    wf = Workflow(steps)
    if pool is not None:
        pool.publish(
            "workflow",
            "planner",
            {"instruction": instr.text, "steps": [s.classname for s in wf.steps]},
        )
    return wf


def next_action(
    registry: ActionRegistry,
    workflow: Workflow,
    available: set[DataFormat],
    dead: set[str] = frozenset(),
) -> ActionStep:
    """Earliest executable workflow step, or the first conversion of the
    shortest chain that unblocks the earliest blocked step."""
    pending = [s for s in workflow.steps if not s.executed]
    if not pending:
        raise AgentError("workflow has no unexecuted steps")
    for step in pending:
        manifest = registry.manifest(step.classname)
        if _unbound_formats(manifest, step) <= available:
            return step
    blocked = pending[0]
    missing = _unbound_formats(registry.manifest(blocked.classname), blocked) - available
    chain = shortest_chain(registry, available, missing, dead)
    first = registry.manifest(chain[0])
    return ActionStep(first.classname, {}, first.output)


# ---------------------------------------------------------------------------
# evaluator


@dataclass
class EvalReport:
    passed: bool
    per_class_iou: dict[str, float] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)
    rendered: ClassGrid | None = None

    def min_iou(self) -> float | None:
        return min(self.per_class_iou.values()) if self.per_class_iou else None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "per_class_iou": {k: round(v, 6) for k, v in self.per_class_iou.items()},
            "violations": list(self.violations),
        }


def rasterize_scene(
    state: SceneState, shape: tuple[int, int], cell_size: float, palette: Palette
) -> ClassGrid:
    """Top-down orthographic semantic render at the given grid geometry.

    Objects rasterize their world footprints in painter's order
    road < green < water < building; footprint-less objects are skipped.
    """
    ground = palette.index_of("ground") if "ground" in palette.labels else 0
    classes = np.full(shape, ground, dtype=np.int16)
    for cls in PAINT_ORDER:
        if cls not in palette.labels:
            continue
        idx = palette.index_of(cls)
        for name in sorted(state.objects):
            obj = state.objects[name]
            if obj.semantic_class != cls:
                continue
            fp = obj.world_footprint()
            if fp is None:
                continue
            classes[polygon_mask(shape, cell_size, fp)] = idx
    return ClassGrid(classes, cell_size, palette)


def _structural_violations(state: SceneState) -> list[str]:
    violations: list[str] = []
    names = sorted(
        n for n, o in state.objects.items() if o.semantic_class == "building" and o.footprint is not None
    )
    shapes = []
    for n in names:
        fp = state.objects[n].world_footprint()
        import shapely.geometry as sg

        shapes.append(sg.Polygon(fp.outer, fp.holes))
    if shapes:
        tree = STRtree(shapes)
        for i, sp in enumerate(shapes):
            for j in tree.query(sp):
                j = int(j)
                if j <= i:
                    continue
                if sp.intersection(shapes[j]).area > 1e-6:
                    violations.append(f"footprints of {names[i]} and {names[j]} overlap")
    if state.bounds:
        minx, miny, maxx, maxy = state.bounds
        for name in sorted(state.objects):
            obj = state.objects[name]
            fp = obj.world_footprint()
            if fp is not None:
                bx0, by0, bx1, by1 = fp.bounds()
            else:
                bx0 = bx1 = float(obj.translation[0])
                by0 = by1 = float(obj.translation[1])
            if bx0 < minx - 1e-6 or by0 < miny - 1e-6 or bx1 > maxx + 1e-6 or by1 > maxy + 1e-6:
                violations.append(f"object {name} leaves the scene bounds")
    return violations


def evaluate(
    state: SceneState,
    instruction: Instruction | None = None,
    guidance: GuidanceDoc | None = None,
    reference: ClassGrid | None = None,
    iou_threshold: float = IOU_THRESHOLD,
) -> EvalReport:
    """Deterministic evaluation: semantic render + per-class IoU against
    the reference (when given) and structural checks. Pure in its inputs."""
    rendered = None
    per_class: dict[str, float] = {}
    if reference is not None:
        rendered = rasterize_scene(
            state, (reference.height, reference.width), reference.cell_size, reference.palette
        )
        for idx, label in enumerate(reference.palette.labels):
            if label == "ground":
                continue
            a = reference.classes == idx
            b = rendered.classes == idx
            union = int(np.logical_or(a, b).sum())
            if union == 0:
                continue
            inter = int(np.logical_and(a, b).sum())
            per_class[label] = inter / union
    violations = _structural_violations(state)
    iou_ok = all(v >= iou_threshold for v in per_class.values())
    return EvalReport(iou_ok and not violations, per_class, violations, rendered)


# ---------------------------------------------------------------------------
# language-model clients (rule-based default, remote stub)


class RuleBasedClient:
    """Deterministic interpreter used by all tests and offline runs."""

    def interpret(self, text: str, guidance: GuidanceDoc | None = None) -> Instruction:
        return parse_instruction(text)


class RemoteLanguageClient:
    """Forwards prompts to a configured HTTP endpoint (same interface)."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def interpret(self, text: str, guidance: GuidanceDoc | None = None) -> Instruction:
        import json as _json
        import urllib.request

        body = _json.dumps(
            {"instruction": text, "guidance": guidance.text if guidance else ""}
        ).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint + "/interpret", body, {"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            data = _json.loads(resp.read())
        return Instruction(text, data["verb"], data["selector"], data.get("params", {}))


# ---------------------------------------------------------------------------
# session: the executor loop with bounded replanning


@dataclass
class InstructionResult:
    instruction: str
    report: EvalReport
    proposed: int
    executed: int
    correct: int
    failure: str | None = None
    steps_run: list[str] = field(default_factory=list)


class Session:
    """One scene session: message pool, value store, executor state.

    The values dict maps a DataFormat to the latest payload of that format
    (published through the pool trace); argument binding consults, in
    order, the planner's instruction-bound arguments, these pool values,
    and per-format action-doc defaults.
    """

    def __init__(
        self,
        registry: ActionRegistry,
        library=None,
        seed: int = 0,
        palette: Palette | None = None,
        style: str = "modern",
        weather: str = "clear",
        guidance: dict[str, GuidanceDoc] | None = None,
        reference: ClassGrid | None = None,
        inputs: dict | None = None,
        dead_actions: set[str] | None = None,
        interpreter=None,
    ):
        self.registry = registry
        self.library = library
        self.seed = seed
        self.palette = palette or Palette.default()
        self.style = style
        self.weather = weather
        self.guidance = guidance or {}
        self.reference = reference
        self.inputs = dict(inputs or {})
        self.pool = MessagePool()
        self.state = SceneState()
        self.values: dict[DataFormat, object] = {}
        self.dead_actions: set[str] = set(dead_actions or ())
        self.interpreter = interpreter or RuleBasedClient()
        self.counters = {"proposed": 0, "executed": 0, "correct": 0}
        self._arg_counter = 0
        self._last_min_iou: float | None = None
        annotate(registry, self.pool)

    # -- availability ---------------------------------------------------------

    def available(self) -> set[DataFormat]:
        # an instruction is always at hand, so string inputs are bindable
        return set(self.values) | {DataFormat.STRING_INFORMATION}

    # -- executor ---------------------------------------------------------------

    def _default_argument(self, fmt: DataFormat, instr: Instruction | None):
        if fmt is DataFormat.RANDOM_NUMBER:
            self._arg_counter += 1
            rng = np.random.default_rng(subsystem_seed(self.seed, "action-args", self._arg_counter))
            return float(rng.uniform(1.0, 8.0))
        if fmt is DataFormat.STRING_INFORMATION and instr is not None:
            return instr.selector
        if fmt is DataFormat.SCENE_LAYOUT and self.state.objects:
            return self.state
        raise ArgumentBindingError(fmt.value)

    def bind_arguments(self, step: ActionStep, instr: Instruction | None = None) -> dict:
        manifest = self.registry.manifest(step.classname)
        bound = {}
        for inp in manifest.inputs:
            if inp.name in step.arguments:
                bound[inp.name] = step.arguments[inp.name]
            elif inp.format in self.values:
                bound[inp.name] = self.values[inp.format]
            else:
                try:
                    bound[inp.name] = self._default_argument(inp.format, instr)
                except ArgumentBindingError:
                    raise ArgumentBindingError(inp.name) from None
        for key, value in step.arguments.items():
            if key not in bound:
                bound[key] = value
        return bound

    def execute_step(self, step: ActionStep, instr: Instruction | None = None) -> SceneState:
        """Bind, run, bump the revision, publish the trace entry.

        Only successful executions land under the "trace" topic, so the
        revision counter always equals the trace length; failed attempts
        are published under "failures".
        """
        manifest = self.registry.manifest(step.classname)
        payload = {
            "classname": step.classname,
            "inputs": [i.format.value for i in manifest.inputs],
            "available_before": sorted(f.value for f in self.available()),
            "argument_bound": sorted(
                i.name for i in manifest.inputs if i.name in step.arguments
            ),
        }
        bound = self.bind_arguments(step, instr)
        payload["arguments"] = _summarize_args(bound)
        impl = self.registry.implementation(step.classname)
        try:
            result = impl(self, **bound)
        except ActionFailed as e:
            self.pool.publish("failures", "executor", {**payload, "outcome": f"failed: {e.reason}"})
            raise
        except AgentError:
            raise
        except Exception as e:  # implementation bug surfaces as a failed action
            self.pool.publish("failures", "executor", {**payload, "outcome": f"failed: {e}"})
            raise ActionFailed(step.classname, str(e)) from e
        self.state.revision += 1
        if manifest.output is not None:
            self.state.available_formats.add(manifest.output)
            self.values[manifest.output] = result
        step.executed = True
        self.pool.publish("trace", "executor", {**payload, "outcome": "ok"})
        return self.state

    # -- the plan/execute/evaluate loop ------------------------------------------

    def run_instruction(self, text: str) -> InstructionResult:
        """Plan, execute and evaluate one instruction with bounded replans.

        Raises Uninterpretable and Unsatisfiable for inputs the planner
        cannot handle; action failures are captured in the result.
        """
        instr = self.interpreter.interpret(text, self.guidance.get("planner"))
        proposed = executed = correct = 0
        steps_run: list[str] = []
        failure: str | None = None
        self._last_min_iou = None
        workflow = plan_workflow(
            self.registry, instr, self.guidance.get("planner"), self.available(), self.pool, self.dead_actions
        )
        proposed += len(workflow.steps)
        replans = 0
        report = None
        while True:
            aborted = False
            guard = 0
            limit = len(workflow.steps) + 4 * max(4, len(self.registry))
            while any(not s.executed for s in workflow.steps):
                guard += 1
                if guard > limit:
                    aborted = True
                    failure = "executor iteration limit reached"
                    break
                try:
                    step = next_action(self.registry, workflow, self.available(), self.dead_actions)
                except Unsatisfiable as e:
                    aborted = True
                    failure = str(e)
                    break
                inserted = step not in workflow.steps
                if inserted:
                    proposed += 1
                try:
                    self.execute_step(step, instr)
                    executed += 1
                    steps_run.append(step.classname)
                    post = evaluate(self.state, instr, self.guidance.get("evaluator"), self.reference)
                    mi = post.min_iou()
                    ok = not post.violations and (
                        mi is None or self._last_min_iou is None or mi >= self._last_min_iou - 1e-12
                    )
                    if ok:
                        correct += 1
                    if mi is not None:
                        self._last_min_iou = mi
                except (ActionFailed, ArgumentBindingError) as e:
                    aborted = True
                    failure = str(e)
                    goal_failed = step is workflow.steps[-1]
                    if not goal_failed:
                        self.dead_actions.add(step.classname)
                    break
            report = evaluate(self.state, instr, self.guidance.get("evaluator"), self.reference)
            if failure is not None:
                report.violations.append(failure)
                report.passed = False
            if report.passed or replans >= REPLAN_LIMIT:
                break
            if failure is not None and any(s is workflow.steps[-1] and s.executed for s in workflow.steps):
                break
            replans += 1
            self.pool.publish("feedback", "evaluator", report.to_json())
            try:
                new_wf = plan_workflow(
                    self.registry, instr, self.guidance.get("planner"), self.available(), self.pool, self.dead_actions
                )
            except (Unsatisfiable, Uninterpretable):
                break
            old_names = [s.classname for s in workflow.steps]
            new_names = [s.classname for s in new_wf.steps]
            fully_executed = all(s.executed for s in workflow.steps)
            if new_names == old_names and fully_executed:
                break  # deterministic planner has nothing new to try
            # carry over execution marks for steps that already ran
            done = {s.classname for s in workflow.steps if s.executed}
            for s in new_wf.steps:
                if s.classname in done:
                    s.executed = True
            proposed += sum(1 for s in new_wf.steps if not s.executed)
            failure = None
            workflow = new_wf
        self.counters["proposed"] += proposed
        self.counters["executed"] += executed
        self.counters["correct"] += correct
        return InstructionResult(text, report, proposed, executed, correct, failure, steps_run)

    def fork(self) -> "Session":
        """Independent copy sharing the registry and library.

        The message pool history is carried over (entries are immutable);
        counters restart so per-fork metrics are attributable.
        """
        import copy

        twin = Session.__new__(Session)
        twin.__dict__.update(self.__dict__)
        twin.pool = self.pool.clone()
        twin.state, twin.values, twin.inputs = copy.deepcopy(
            (self.state, self.values, self.inputs)
        )
        twin.dead_actions = set(self.dead_actions)
        twin.counters = {"proposed": 0, "executed": 0, "correct": 0}
        twin._arg_counter = self._arg_counter
        twin._last_min_iou = None
        return twin


def _summarize_args(bound: dict) -> dict:
    out = {}
    for k, v in bound.items():
        if isinstance(v, (int, float, str, bool, tuple)) and len(str(v)) < 120:
            out[k] = v
        else:
            out[k] = f"<{type(v).__name__}>"
    return out
