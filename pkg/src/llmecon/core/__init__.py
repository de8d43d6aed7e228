"""Core runtime: conditions, transcripts, the chat client, simulations and campaigns."""
