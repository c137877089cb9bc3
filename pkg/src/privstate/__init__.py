"""Private quantum states, twisting and key distillation from bound entanglement."""
