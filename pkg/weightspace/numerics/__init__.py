from .autodiff import backward, central_difference, relative_error
from .ops import Tensor, add, matmul, mean, mse, mul, norm, reduce_sum, relu, sin
from .optim import AdamState, adam_step, make_adam, make_sparse_adam, sparse_adam_step
from .rng import Rng
from .schedules import LrSchedule, ScheduleKind, lr_schedule
