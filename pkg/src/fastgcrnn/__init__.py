"""FastGCRNN: sampled graph convolution + GRU encoder-decoder for road traffic flow."""

__version__ = "0.1.0"
