from .configure_logging import *
from .parsing import *
