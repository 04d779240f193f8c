"""
Weight-space representation learning for neural fields.

Instances (toy images or analytic SDFs) are fitted as network weights under six parameterizations, the resulting
weight datasets are analyzed, diffused and evaluated. Each pipeline stage is a subcommand of the `weightspace` CLI.
"""
