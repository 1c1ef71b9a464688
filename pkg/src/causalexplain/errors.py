"""Exception hierarchy.

Everything raised on purpose derives from ``CausalExplainError``. Input problems
are ``ValidationError`` (CLI exit code 1); failures that happen while computing
on valid input are ``ComputationError`` (CLI exit code 2).
"""


class CausalExplainError(Exception):
    pass


class ValidationError(CausalExplainError, ValueError):
    pass


class ComputationError(CausalExplainError, RuntimeError):
    pass


# graph
class CycleError(ValidationError):
    def __init__(self, nodes=()):
        self.nodes = tuple(nodes)
        msg = "edge set admits no topological order"
        if self.nodes:
            msg += " (nodes on a cycle: " + ", ".join(map(str, self.nodes)) + ")"
        super().__init__(msg)


class DuplicateError(ValidationError):
    pass


class UnknownNodeError(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class OverlapError(ValidationError):
    pass


class NodeMismatchError(ValidationError):
    pass


# scm
class SpecSyntaxError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class InconsistentParentsError(ValidationError):
    pass


# data
class ConstantColumnError(ValidationError):
    pass


class EmptySplitError(ValidationError):
    pass


# models
class RankDeficiencyError(ComputationError):
    pass


class EmptyFeatureError(ValidationError):
    pass


class MissingPredictorError(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class LengthMismatchError(ValidationError):
    pass


class DivergenceError(ComputationError):
    pass


# explain
class UntrainedError(ComputationError):
    pass


class TooManyFeaturesError(ValidationError):
    pass


class EmptyBackgroundError(ValidationError):
    pass


# independence
class InsufficientSamplesError(ValidationError):
    pass


class SingularityError(ComputationError):
    pass


# harness
class ConfigError(ValidationError):
    pass
