from src.commands import ablate_command, bench_command, eval_command, gradcheck_command, sr_command, train_command

COMMANDS = [
    train_command.command,
    sr_command.command,
    eval_command.command,
    ablate_command.command,
    gradcheck_command.command,
    bench_command.command,
]
