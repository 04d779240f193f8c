from .numeric import *
