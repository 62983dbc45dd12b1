from commands import augment, evaluate, featurize, index, predict, split, stats, train
from config import create_cli, get_logger

# Initialize the command-line application
cli = create_cli()
logger = get_logger()

# Register pipeline stages
cli.add_command(index.command)
cli.add_command(featurize.command)
cli.add_command(split.command)
cli.add_command(augment.command)
cli.add_command(train.command)
cli.add_command(evaluate.command)
cli.add_command(predict.command)
cli.add_command(stats.command)


if __name__ == "__main__":
    cli()
