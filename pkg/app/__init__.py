"""命令行应用初始化"""
import argparse
import sys
from config import DevelopmentConfig
from app.utils.errors import BeamSurfaceError, ConfigError
from app.utils.logger import get_logger, set_level, setup_logger

__version__ = '1.0.0'

logger = get_logger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """参数错误抛出ConfigError, 由应用统一输出单行错误"""

    def error(self, message):
        raise ConfigError(f'{self.prog}: {message}')


class CommandLineApp:
    """命令行应用: 解析参数并分发到子命令"""

    def __init__(self, config, parser):
        self.config = config
        self.parser = parser

    def run(self, argv=None):
        """
        执行一条命令

        Args:
            argv: 参数列表, 默认取 sys.argv[1:]

        Returns:
            退出码
        """
        try:
            args = self.parser.parse_args(argv)
            if getattr(args, 'verbose', False):
                setup_logger(log_level=self.config.LOG_LEVEL, verbose=True)
            logger.info(f'执行命令: {args.command}')
            return args.handler(args, self.config)
        except BeamSurfaceError as e:
            logger.error(f'命令执行失败: {e.message}', exc_info=True)
            print(e.to_line(), file=sys.stderr)
            return e.exit_code
        except Exception as e:
            logger.error(f'命令执行出现未预期的错误: {str(e)}', exc_info=True)
            print(BeamSurfaceError(f'{type(e).__name__}: {e}').to_line(), file=sys.stderr)
            return BeamSurfaceError.exit_code


def create_app(config=None):
    """
    创建命令行应用

    Args:
        config: 配置类

    Returns:
        CommandLineApp实例
    """
    config = config or DevelopmentConfig

    # 设置日志
    setup_logger(log_level=config.LOG_LEVEL)
    set_level(config.LOG_LEVEL)

    parser = ArgumentParser(prog='beam-to-surface', description='激光雷达光束-表面关联与辐射指纹工具')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='在控制台输出INFO日志')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    # 注册子命令
    register_commands(subparsers)

    return CommandLineApp(config, parser)


def register_commands(subparsers):
    """
    注册子命令

    Args:
        subparsers: argparse子命令集合
    """
    from app.commands import association_commands, fingerprint_commands, registration_commands, \
        report_commands, scan_commands

    scan_commands.register(subparsers)
    association_commands.register(subparsers)
    fingerprint_commands.register(subparsers)
    registration_commands.register(subparsers)
    report_commands.register(subparsers)
