from .logging_tools import *
