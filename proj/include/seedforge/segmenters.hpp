/* Seeded segmentation back ends.
 *
 * GrowCut: synchronous cellular automaton. A labeled neighbour q attacks p
 * with force (1 - |C_p - C_q|) * theta_q and conquers p when that force
 * strictly exceeds theta_p. The strongest attacker wins; equal forces go to
 * the lowest linear index.
 *
 * Random Walker: FG probability from the combinatorial Dirichlet problem on
 * the face-adjacency lattice, edge weights exp(-beta * dI^2), solved with
 * Jacobi-preconditioned conjugate gradient.
 */
#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "seedforge/grid.hpp"

namespace seedforge {

struct SolverParams {
  double cg_tolerance = 1e-8;          // relative residual
  std::size_t cg_max_iterations = 0;   // 0 selects 10 * unknowns
  std::size_t gc_max_sweeps = 1000;
  double rw_beta = 90.0;

  void validate() const {
    if (!(cg_tolerance > 0.0))
      throw Error(ErrorKind::parameter, "CG tolerance must be > 0", "segmentation");
    if (!(rw_beta >= 0.0) || !std::isfinite(rw_beta))
      throw Error(ErrorKind::parameter, "random walker beta must be >= 0", "segmentation");
    if (gc_max_sweeps < 1)
      throw Error(ErrorKind::parameter, "GrowCut sweep cap must be >= 1", "segmentation");
  }
  bool operator==(const SolverParams&) const = default;
};

struct SegmenterDiagnostics {
  std::string kind;          // "gc" or "rw"
  std::size_t iterations = 0;  // GrowCut sweeps or CG iterations
  bool converged = false;
  double residual = 0.0;     // CG relative residual
  std::vector<std::string> warnings;
};

struct SegmentationResult {
  LabelMap labels;
  SegmenterDiagnostics diagnostics;
  std::vector<double> strength;  // final GrowCut strengths (empty for RW)
};

inline void require_both_seed_classes(const SeedMask& seeds) {
  bool fg = false, bg = false;
  for (auto l : seeds.labels()) {
    fg = fg || l == Label::fg;
    bg = bg || l == Label::bg;
  }
  if (!fg || !bg)
    throw Error(ErrorKind::seeding, std::string("segmenter needs at least one ") +
                                        (fg ? "BG" : "FG") + " seed",
                "segmentation");
}

inline SegmentationResult growcut(const ImageGrid& grid, const SeedMask& seeds,
                                  const StrengthMap& strengths, const SolverParams& params = {}) {
  params.validate();
  const Shape& shape = grid.shape();
  require_same_shape(shape, seeds.shape(), "growcut seeds");
  require_same_shape(shape, strengths.shape(), "growcut strengths");
  require_both_seed_classes(seeds);
  const auto C = grid.values();
  const std::size_t n = C.size();

  std::vector<Label> label(seeds.labels().begin(), seeds.labels().end());
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i)
    theta[i] = label[i] == Label::unlabeled ? 0.0 : std::clamp(strengths[i], 0.0, 1.0);

  std::vector<Label> next_label = label;
  std::vector<double> next_theta = theta;
  std::vector<std::size_t> candidates(n);
  for (std::size_t i = 0; i < n; ++i) candidates[i] = i;
  std::vector<std::size_t> changed;
  std::vector<std::uint8_t> mark(n, 0);

  SegmentationResult res;
  res.diagnostics.kind = "gc";
  std::size_t sweep = 0;
  while (sweep < params.gc_max_sweeps) {
    ++sweep;
    changed.clear();
    for (std::size_t p : candidates) {
      double best = theta[p];
      std::size_t attacker = n;
      shape.for_each_neighbor(p, [&](std::size_t q) {
        if (label[q] == Label::unlabeled) return;
        const double force = (1.0 - std::abs(C[p] - C[q])) * theta[q];
        if (force > best) {  // neighbours arrive in index order: ties keep the lowest
          best = force;
          attacker = q;
        }
      });
      if (attacker != n) {
        next_label[p] = label[attacker];
        next_theta[p] = best;
        changed.push_back(p);
      }
    }
    if (changed.empty()) {
      res.diagnostics.converged = true;
      break;
    }
    for (std::size_t p : changed) {
      label[p] = next_label[p];
      theta[p] = next_theta[p];
    }
    // A voxel can only change next sweep if it or a neighbour just changed.
    candidates.clear();
    for (std::size_t p : changed) {
      if (!mark[p]) {
        mark[p] = 1;
        candidates.push_back(p);
      }
      shape.for_each_neighbor(p, [&](std::size_t q) {
        if (!mark[q]) {
          mark[q] = 1;
          candidates.push_back(q);
        }
      });
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t p : candidates) mark[p] = 0;
  }
  res.diagnostics.iterations = sweep;
  if (!res.diagnostics.converged)
    res.diagnostics.warnings.push_back("GrowCut reached the sweep cap before converging");

  std::size_t orphans = 0;
  res.labels.shape = shape;
  res.labels.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == Label::unlabeled) {
      ++orphans;
      res.labels.labels[i] = Label::bg;
    } else {
      res.labels.labels[i] = label[i];
    }
  }
  if (orphans)
    res.diagnostics.warnings.push_back(std::to_string(orphans) +
                                       " voxels unreached by GrowCut labeled BG");
  res.strength = std::move(theta);
  return res;
}

inline double rw_edge_weight(double a, double b, double beta) {
  const double d = a - b;
  return std::max(std::exp(-beta * d * d), std::numeric_limits<double>::min());
}

struct RwProbability {
  std::vector<double> probability;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::size_t disconnected = 0;  // unseeded voxels with no path to any seed
  std::size_t out_of_range = 0;  // raw values outside [0,1] by more than 1e-9
};

/// Probability that a walker started at each voxel first reaches a seed
/// labeled `target`. Seeds get 1 (target) or 0 (other label). Values are the
/// unclamped solver output.
inline RwProbability random_walker_probability(const ImageGrid& grid, const SeedMask& seeds,
                                               Label target, const SolverParams& params = {}) {
  params.validate();
  const Shape& shape = grid.shape();
  require_same_shape(shape, seeds.shape(), "random_walker seeds");
  const auto I = grid.values();
  const std::size_t n = I.size();

  RwProbability out;
  out.probability.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (seeds[i] == target) out.probability[i] = 1.0;

  // Unseeded voxels reachable from a seed become unknowns.
  constexpr std::size_t none = SIZE_MAX;
  std::vector<std::size_t> unknown(n, none);
  std::vector<std::uint8_t> reached(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (seeds[i] != Label::unlabeled) {
      reached[i] = 1;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    shape.for_each_neighbor(v, [&](std::size_t q) {
      if (!reached[q] && seeds[q] == Label::unlabeled) {
        reached[q] = 1;
        queue.push_back(q);
      }
    });
  }
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (seeds[i] != Label::unlabeled) continue;
    if (reached[i])
      unknown[i] = m++;
    else
      ++out.disconnected;
  }
  if (m == 0) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(m * (2 * shape.rank() + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = unknown[i];
    if (row == none) continue;
    double degree = 0.0;
    shape.for_each_neighbor(i, [&](std::size_t j) {
      const double w = rw_edge_weight(I[i], I[j], params.rw_beta);
      degree += w;
      if (unknown[j] != none)
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(unknown[j]), -w);
      else if (seeds[j] == target)
        rhs[static_cast<Eigen::Index>(row)] += w;
    });
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), degree);
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  A.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(params.cg_tolerance);
  cg.setMaxIterations(static_cast<Eigen::Index>(
      params.cg_max_iterations ? params.cg_max_iterations : 10 * m));
  cg.compute(A);
  const Eigen::VectorXd x = cg.solve(rhs);
  out.iterations = static_cast<std::size_t>(cg.iterations());
  out.residual = cg.error();
  if (cg.info() != Eigen::Success)
    throw SolverError("conjugate gradient did not converge (relative residual " +
                          std::to_string(out.residual) + ")",
                      out.residual, out.iterations);
  for (std::size_t i = 0; i < n; ++i) {
    if (unknown[i] == none) continue;
    const double v = x[static_cast<Eigen::Index>(unknown[i])];
    out.probability[i] = v;
    out.out_of_range += v < -1e-9 || v > 1.0 + 1e-9;
  }
  return out;
}

inline SegmentationResult random_walker(const ImageGrid& grid, const SeedMask& seeds,
                                        const SolverParams& params = {}) {
  require_same_shape(grid.shape(), seeds.shape(), "random_walker seeds");
  require_both_seed_classes(seeds);
  auto p = random_walker_probability(grid, seeds, Label::fg, params);
  SegmentationResult res;
  res.diagnostics.kind = "rw";
  res.diagnostics.iterations = p.iterations;
  res.diagnostics.residual = p.residual;
  res.diagnostics.converged = true;
  if (p.disconnected)
    res.diagnostics.warnings.push_back(std::to_string(p.disconnected) +
                                       " voxels disconnected from all seeds labeled BG");
  // Very weak edges (large beta times large steps) leave the system nearly
  // singular in double precision; the solve is then unreliable there.
  if (p.out_of_range)
    res.diagnostics.warnings.push_back(std::to_string(p.out_of_range) +
                                       " probabilities outside [0,1] before clamping; the system is "
                                       "ill-conditioned (consider a smaller rw-beta or pre-filtering)");
  res.labels.shape = grid.shape();
  res.labels.labels.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    p.probability[i] = std::clamp(p.probability[i], 0.0, 1.0);
    res.labels.labels[i] = p.probability[i] >= 0.5 ? Label::fg : Label::bg;
  }
  res.labels.fg_probability = std::move(p.probability);
  return res;
}

}  // namespace seedforge
