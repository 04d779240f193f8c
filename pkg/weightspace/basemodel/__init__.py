from .autodecoder import *
from .configuration import *
from .schedule import *
