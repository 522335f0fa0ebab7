"""Exception types shared across the package."""


class MolGfnError(Exception):
    """Base class for all package errors."""


class IllegalAction(MolGfnError):
    """Action application attempted on a state where its mask slot is false."""


class UnknownNodeId(MolGfnError):
    """Action references a node id not present in the graph."""


class InvalidMolecule(MolGfnError):
    """Operation requires a terminal-valid molecule."""


class SmilesSyntaxError(MolGfnError):
    """Input string is not parseable under the supported SMILES grammar."""


class UnsupportedElement(MolGfnError):
    """Atom outside the supported element vocabulary."""


class ChargeUnsupported(MolGfnError):
    """Bracket atom carries a nonzero formal charge."""


class KekulizationFailure(MolGfnError):
    """No alternating single/double assignment exists for an aromatic system."""


class ValenceError(MolGfnError):
    """Bond orders (plus any explicit H count) exceed an atom's permitted valence."""


class ShapeMismatch(MolGfnError):
    """Tensor shapes disagree with the declared feature layout."""


class BackwardFromInitial(MolGfnError):
    """Backward policy queried on the empty initial state."""


class NoLegalAction(MolGfnError):
    """Sampling requested from a fully-masked slot vector."""


class NonFiniteLoss(MolGfnError):
    """Loss evaluated to NaN or infinity."""


class NonFiniteGradient(MolGfnError):
    """A gradient array contains NaN or infinity."""


class ConfigError(MolGfnError):
    """Malformed or unknown configuration key/value."""


class CheckpointMismatch(MolGfnError):
    """Checkpoint dimensions or fingerprint disagree with the active config."""


class BudgetExceeded(MolGfnError):
    """Enumeration grew past the configured state budget."""


class TooFewSamples(MolGfnError):
    """Metric requires more samples than provided."""


class DegenerateRange(MolGfnError):
    """Conditional range has zero width where a positive width is required."""


class EmptySet(MolGfnError):
    """Metric report requested for an empty record list."""
