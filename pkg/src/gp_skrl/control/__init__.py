from gp_skrl.control.base import ControlDecision, Controller
from gp_skrl.control.excitation import ExcitationController
from gp_skrl.control.policy import PolicyController

__all__ = ["ControlDecision", "Controller", "ExcitationController", "PolicyController"]
