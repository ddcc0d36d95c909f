"""Brute-force valuation by enumerating every root-to-leaf path.

Cross-check for src.dcf_engine: shares nothing with it beyond the tree
model types. Each of the 8 paths contributes its probability times the
present value of the flows realized along it.
"""

import logging

from src.tree_model import ModelValidationError, OptionTree, validate_tree

logger = logging.getLogger(__name__)


def enumerate_value(tree: OptionTree) -> float:
    """V0 of a deterministic tree by literal path enumeration.

    Raises:
        ModelValidationError: If the tree is invalid
        ValueError: If the tree holds a random distribution
    """
    report = validate_tree(tree)
    if not report.is_valid:
        raise ModelValidationError(report, "option tree")
    for dist in tree.distributions():
        if dist.is_random:
            raise ValueError("Path enumeration only values deterministic trees")

    total = 0.0
    for path, first, second, leaf in tree.iter_paths():
        probability = first.control.p * second.control.p * leaf.p

        flows = [first.cash_flow.expected + first.control.delta.expected,
                 second.cash_flow.expected + second.control.delta.expected]
        flows += [cf.expected for cf in leaf.cash_flows]

        path_value = 0.0
        for k, cf in enumerate(flows, start=1):
            path_value += cf / (1 + tree.rate) ** k

        logger.debug(f"path {path}: probability={probability:.6g} value={path_value:.4f}")
        total += probability * path_value
    return total
