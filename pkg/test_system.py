"""
系统自检脚本
依次检查各模块的基本功能, 直接运行: python test_system.py
"""

import sys

import numpy as np


def check_network():
    """检查网络读取与生成"""
    print("\n" + "=" * 80)
    print("检查网络模块")
    print("=" * 80)

    try:
        from graph_generators import SbmConfig, generate_sbm
        from graph_loader import load_karate_club
        from network_graph import spectral_radius

        karate = load_karate_club(0.1)
        print(f"✓ 空手道俱乐部网络: n={karate.n}, m={karate.m}, rho(W)={spectral_radius(karate):.4f}")

        sbm = generate_sbm(SbmConfig(seed=1))
        print(f"✓ SBM样本: n={sbm.n}, m={sbm.m}")
        return karate.n == 34 and karate.m == 156

    except Exception as e:
        print(f"✗ 错误: {str(e)}")
        return False


def check_propagation():
    """检查GIP传播与EIC闭式解"""
    print("\n" + "=" * 80)
    print("检查传播模块")
    print("=" * 80)

    try:
        from bound_schedules import EicLimitBounds, ThresholdTypeBounds
        from graph_loader import load_karate_club
        from propagation_analysis import eic_closed_form
        from propagation_engine import PropagationConfig, evaluate_influence

        graph = load_karate_club(0.1)
        x0 = np.zeros(graph.n)
        x0[:3] = 1.0

        linear = evaluate_influence(graph, EicLimitBounds(), PropagationConfig(eps=1e-12), x0)
        closed = eic_closed_form(graph, 0.0, x0)
        print(f"✓ EIC极限: 传播 {linear.total:.6f}, 闭式解 {closed:.6f}, 步数 {linear.steps}")

        threshold = evaluate_influence(graph, ThresholdTypeBounds(2.0, 4.0, 0.1), PropagationConfig(), x0)
        print(f"✓ 阈值型边界 θ_l=2, θ_h=4: 总影响力 {threshold.total:.6f}, 步数 {threshold.steps}")

        return abs(linear.total - closed) < 1e-6 and threshold.total <= linear.total

    except Exception as e:
        print(f"✗ 错误: {str(e)}")
        return False


def check_solvers():
    """检查CDS与穷举"""
    print("\n" + "=" * 80)
    print("检查影响力最大化求解器")
    print("=" * 80)

    try:
        from bound_schedules import ThresholdTypeBounds
        from graph_loader import load_karate_club
        from im_problem import ImProblem, InfluenceObjective
        from im_solvers import BruteForceSolver, CdsSolver
        from solution_metrics import accuracy, rank_metric

        graph = load_karate_club(0.1)
        problem = ImProblem(graph, ThresholdTypeBounds(2.0, 2.0, 0.1), k=2)
        objective = InfluenceObjective(problem)

        outcome = CdsSolver().solve(problem, objective)
        print(f"✓ CDS: 种子 {[graph.label_of(i) for i in outcome.seed_set]}, "
              f"目标值 {outcome.objective:.6f}, 评估 {outcome.n_evals} 次")

        ranking = BruteForceSolver().rank(problem, objective)
        tau = accuracy(outcome.objective, ranking)
        phi = rank_metric(outcome.seed_set, ranking)
        print(f"✓ 穷举: {len(ranking)} 个集合, 准确率 {tau:.4f}, 排名 {phi:.6f}")

        return tau > 0.9

    except Exception as e:
        print(f"✗ 错误: {str(e)}")
        return False


def check_experiment():
    """检查实验运行器"""
    print("\n" + "=" * 80)
    print("检查实验运行器")
    print("=" * 80)

    try:
        from experiment_runner import ExperimentConfig, run_experiment

        config = ExperimentConfig(
            kind='sbm-effects',
            samples=5,
            model={'theta_l': [1.0, 2.0], 'theta_h': 'same'},
        )
        result = run_experiment(config)
        ratios = result.table[result.table['metric'] == 'ratio']['value']
        print(f"✓ SBM社区效应: {len(result.table)} 行结果, 平均比值 {ratios.mean():.4f}")
        print(f"  未收敛次数: {result.non_converged}")
        return result.non_converged == 0

    except Exception as e:
        print(f"✗ 错误: {str(e)}")
        return False


def main():
    """运行所有检查"""
    print("=" * 80)
    print("GIP传播与影响力最大化 - 功能自检")
    print("=" * 80)

    checks = [
        ("网络模块", check_network),
        ("传播模块", check_propagation),
        ("求解器", check_solvers),
        ("实验运行器", check_experiment),
    ]

    results = []

    for name, check_func in checks:
        try:
            success = check_func()
            results.append((name, success))
        except Exception as e:
            print(f"\n✗ {name} 检查失败: {str(e)}")
            results.append((name, False))

    # 打印总结
    print("\n" + "=" * 80)
    print("自检总结")
    print("=" * 80)

    passed = sum(1 for _, success in results if success)
    total = len(results)

    for name, success in results:
        status = "✓ 通过" if success else "✗ 失败"
        print(f"{name:20s}: {status}")

    print(f"\n总计: {passed}/{total} 项通过")

    if passed == total:
        print("\n🎉 所有检查通过!")
        return 0
    else:
        print(f"\n⚠️  {total - passed} 项未通过")
        return 1


if __name__ == "__main__":
    sys.exit(main())
