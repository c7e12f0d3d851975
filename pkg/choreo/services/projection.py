"""
Projection - From a Choreography to an Endpoint System

Projection is a homomorphism on the term structure: an interaction
a->b:o becomes an output on o at a, an input on o at b, and 1 at every
other role. No simplification of `1 ; P` or `1 | P` is performed.
"""

import logging

from choreo.errors import EmptyChoreography
from choreo.services.endpoint import (
    EndpointSystem,
    Input,
    Output,
    Process,
    ProcChoice,
    ProcOne,
    ProcPar,
    ProcSeq,
    ProcZero,
)
from choreo.services.syntax import (
    Choice,
    Choreography,
    Interaction,
    One,
    Par,
    Role,
    Seq,
    Zero,
    roles,
)

logger = logging.getLogger(__name__)

_HOMOMORPHIC = {Seq: ProcSeq, Par: ProcPar, Choice: ProcChoice}


def project_role(c: Choreography, role: Role) -> Process:
    """
    The process that `role` runs in c.

    Args:
        c: Choreography (total; correctness is only claimed for connected terms)
        role: Any role name, participating or not

    Returns:
        Process term with the same shape as c
    """
    if isinstance(c, Interaction):
        if c.sender == role:
            return Output(c.op)
        if c.receiver == role:
            return Input(c.op)
        return ProcOne()
    if isinstance(c, One):
        return ProcOne()
    if isinstance(c, Zero):
        return ProcZero()
    node_type = _HOMOMORPHIC.get(type(c))
    if node_type is None:
        raise TypeError(f"Not a choreography: {c!r}")
    return node_type(project_role(c.left, role), project_role(c.right, role))


def project(c: Choreography) -> EndpointSystem:
    """
    Project c onto every role it mentions, in sorted role order.

    Raises:
        EmptyChoreography: If c has no interactions, hence no roles
    """
    names = sorted(roles(c))
    if not names:
        raise EmptyChoreography("Cannot project a choreography without roles")
    logger.debug("Projecting onto roles %s", names)
    return EndpointSystem(tuple((role, project_role(c, role)) for role in names))
