import argparse
import json
import logging
import sys

from ladder.errors import KDError
from processor import KDIProcessor, SCANS
from run_config import load_config

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Kapitza-Dirac 电子 Ramsey-Bordé 干涉仪模拟")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help="配置文件路径 (JSON)")
    common.add_argument('--out-dir', default='./out', help="输出目录")
    common.add_argument('-v', '--verbose', action='store_true', help="输出调试日志")

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('simulate', parents=[common], help="运行完整序列，输出密度 CSV 与摘要 JSON")
    splitter = sub.add_parser('splitter', parents=[common], help="单脉冲转移概率扫描")
    splitter.add_argument('--scan', required=True, choices=SCANS, help="扫描对象")
    sweep = sub.add_parser('sweep', parents=[common], help="条纹扫描")
    sweep.add_argument('--param', required=True, choices=['a', 'T_prime'], help="扫描参数: a (m/s²) 或 T_prime (ns)")
    sweep.add_argument('--from', dest='start', type=float, required=True, help="起点")
    sweep.add_argument('--to', dest='stop', type=float, required=True, help="终点")
    sweep.add_argument('--points', type=int, default=None, help="点数 (默认取配置 sweep.points)")
    sub.add_parser('paths', parents=[common], help="输出经典路径与预测束")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = load_config(args.config)
        processor = KDIProcessor(config)
        logging.info(f"命令: {args.command}, 输出目录: {args.out_dir}")

        if args.command == 'simulate':
            summary = processor.simulate(args.out_dir)
            logging.info(f"Δφ 预测: {summary.derived['delta_phi_rad']:.4f} rad, 峰数: {len(summary.peaks)}")
        elif args.command == 'splitter':
            processor.splitter(args.out_dir, args.scan)
        elif args.command == 'sweep':
            processor.sweep(args.out_dir, args.param, args.start, args.stop, args.points)
        else:
            processor.paths(args.out_dir)

        logging.info("处理完成!")
        return 0

    except KDError as e:
        logging.error(f"{type(e).__name__}: {e}")
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logging.error(f"程序运行出错: {e}")
        import traceback
        logging.error(traceback.format_exc())
        return 1


if __name__ == '__main__':
    sys.exit(main())
