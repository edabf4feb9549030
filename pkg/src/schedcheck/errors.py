"""Exception types shared across the package."""


class SchedCheckError(Exception):
    """Base class for all package errors."""


class UnboundVariable(SchedCheckError):
    """An expression or guard referenced a name absent from the store."""


class UndefinedProcess(SchedCheckError):
    """A process call targets a name with no definition."""


class RecursionBudgetExceeded(SchedCheckError):
    """A path unfolded more process calls than the configured limit."""


class ConfigInvalid(SchedCheckError):
    """A ClusterConfig field violates its invariant."""


class EmptyWorkload(SchedCheckError):
    """A model was built from a trace with no tasks."""


class SlotConflict(SchedCheckError):
    """Two tasks were dispatched to the same slot (model bug if raised)."""


class MalformedRow(SchedCheckError):
    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateTaskId(SchedCheckError):
    """Two trace rows carry the same task id."""


class OrphanReduce(SchedCheckError):
    """A reduce task has no sibling map in its job."""


class SpecInvalid(SchedCheckError):
    """Synthetic workload generator parameters are inconsistent."""


class StateBudgetExceeded(SchedCheckError):
    """Exploration hit the state cap before reaching a verdict."""


class TimeBudgetExceeded(SchedCheckError):
    """Exploration hit the wall-clock cap before reaching a verdict."""


class UnknownTask(SchedCheckError):
    """An assertion selector names a task absent from the workload."""


class CoverageGap(SchedCheckError):
    """A trace task is missing from the prediction map."""


class NoFailuresInTruth(SchedCheckError):
    """Detected-failures rate is undefined when the trace has no failures."""


class PropertySyntaxError(SchedCheckError):
    """A property file line does not parse."""
