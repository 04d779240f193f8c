from .channel_receive_loop import ChannelReceiveLoop
from .loop import Loop
