"""Flow-based fulfillment middleware for chatbot action-server webhooks."""

__version__ = "0.1.0"

from .engine import Engine
from .flow_model import FlowDocument, parse_flow, serialize_flow, validate_flow
from .nodes import standard_registry
from .protocol import (
    ActionRequest,
    ActionResponse,
    parse_action_request,
    serialize_action_response,
)

__all__ = [
    "Engine",
    "FlowDocument",
    "ActionRequest",
    "ActionResponse",
    "parse_flow",
    "serialize_flow",
    "validate_flow",
    "parse_action_request",
    "serialize_action_response",
    "standard_registry",
    "__version__",
]
