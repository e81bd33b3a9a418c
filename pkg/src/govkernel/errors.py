"""Error hierarchy for the governance kernel.

Two families matter to callers:

* :class:`DomainError` - the request was well formed but violates a domain
  rule (unknown id, illegal transition, unmet threshold).  CLI exit code 1.
* :class:`IntegrityError` - the store or log itself is unusable (broken hash
  chain, storage failure, lock conflict).  CLI exit code 3.

Every error renders as a single stable line ``Name: detail`` so scripts can
match on the prefix.
"""

from __future__ import annotations


class KernelError(Exception):
    """Base class for all errors raised by this package."""

    def __str__(self) -> str:
        detail = super().__str__()
        name = type(self).__name__
        return f"{name}: {detail}" if detail else name


class DomainError(KernelError):
    """A rule of the domain model was violated.  Maps to CLI exit code 1."""


class IntegrityError(KernelError):
    """The persisted state cannot be trusted.  Maps to CLI exit code 3."""


class UsageError(KernelError):
    """Malformed invocation or input document.  Maps to CLI exit code 2."""


# -- registry ---------------------------------------------------------------

class UnknownEvent(DomainError):
    """A referenced trace event id does not resolve."""


class EmptyContent(DomainError):
    """Artifact content must be non-empty."""


class DuplicateContent(DomainError):
    """A non-deprecated record with the same content hash and kind exists."""


class NotFound(DomainError):
    """An id does not resolve in any registry."""


class UnknownCapability(DomainError):
    """A capability id does not resolve."""


class UnknownConfig(DomainError):
    """A harness config id does not resolve."""


class UnknownSubject(DomainError):
    """A review subject id does not resolve to capability, mutation or config."""


# -- lifecycle --------------------------------------------------------------

class IllegalTransition(DomainError):
    """The requested lifecycle edge is not in the legal transition relation."""


class InsufficientEvidence(DomainError):
    """Evidence thresholds for a promotion edge are not met."""


class MissingApproval(DomainError):
    """A required approved review is absent."""


# -- selection --------------------------------------------------------------

class EmptyCandidateSet(DomainError):
    """Selection over zero candidates is undefined."""


class DuplicateCandidate(DomainError):
    """Two candidate measurements share a config id."""


# -- graph ------------------------------------------------------------------

class UnknownNode(DomainError):
    """An endpoint id is not a node in the runtime graph."""


class DuplicateNode(DomainError):
    """The entity already has a node."""


class UnknownEntity(DomainError):
    """The entity id resolves in no registry, so it cannot become a node."""


class SelfEdge(DomainError):
    """Edges must join two distinct nodes."""


class KindMismatch(DomainError):
    """Endpoint kinds violate the relation's endpoint table."""


class CycleViolation(DomainError):
    """The insertion would close a cycle in an acyclic relation."""


class NotASkill(DomainError):
    """Composition operates on skill nodes only."""


class TooManySkills(DomainError):
    """The composition candidate set exceeds the configured bound."""


class NoQualityComponents(DomainError):
    """The node's entity carries no quality components."""


# -- mutation ---------------------------------------------------------------

class IncompleteContract(DomainError):
    """A change contract field is missing or empty."""


class ComponentMismatch(DomainError):
    """The delta does not target the contract's component."""


class WrongStatus(DomainError):
    """The mutation is not in the status the operation requires."""


class WrongEvaluator(DomainError):
    """The validation was not produced by the contract's falsifying evaluation."""


class ImprovementNotMet(DomainError):
    """Falsification: the validation missed the declared improvement.

    By the time this is raised the rejection has already been committed to
    the log; the mutation is in status ``rejected``.
    """


class ConditionNotMet(DomainError):
    """No rollback condition matches the supplied trigger."""


class StagingConflict(DomainError):
    """Another mutation on the same base config is already staged."""


# -- governance -------------------------------------------------------------

class RiskOutOfRange(DomainError):
    """Risk assessments live in [0, 1]."""


class PolicyViolation(DomainError):
    """The policy document itself is inconsistent."""


# -- simulation -------------------------------------------------------------

class SeedMismatch(DomainError):
    """Policy comparison requires identical seeds and workload parameters."""


# -- persistence ------------------------------------------------------------

class StorageFailure(IntegrityError):
    """An append or read against the store failed."""


class ChainBroken(IntegrityError):
    """The audit log hash chain does not verify."""


class UnknownEventKind(IntegrityError):
    """The log contains an event kind replay does not understand."""


class LockHeld(IntegrityError):
    """Another process holds the store write lock."""
