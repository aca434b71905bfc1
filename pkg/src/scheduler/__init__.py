from .sigma import HISTORY_WINDOW, SigmaState, current_sigma, is_strictly_decreasing, observe_loss
