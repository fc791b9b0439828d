#pragma once

#include <cstdint>
#include <vector>

#include "mfswitch/grid.hpp"

namespace mfc {

// Dense per-mode space-time array: modes x (nt+1) x (ns+1), node-centred.
class ModeField {
 public:
  ModeField() = default;
  ModeField(int modes, const GridSpec& grid)
      : modes_(modes), grid_(grid),
        data_(static_cast<size_t>(modes) * (grid.nt + 1) * (grid.ns + 1), 0.0) {}

  int modes() const { return modes_; }
  const GridSpec& grid() const { return grid_; }

  double& at(int i, int k, int m) { return data_[index(i, k, m)]; }
  double at(int i, int k, int m) const { return data_[index(i, k, m)]; }

  // Pointer to the ns+1 contiguous space values of mode i at time node k.
  double* row(int i, int k) { return data_.data() + index(i, k, 0); }
  const double* row(int i, int k) const { return data_.data() + index(i, k, 0); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  size_t index(int i, int k, int m) const {
    return (static_cast<size_t>(i) * (grid_.nt + 1) + k) * (grid_.ns + 1) + m;
  }

  int modes_ = 0;
  GridSpec grid_{};
  std::vector<double> data_;
};

// phi_i(t_k, s_m): per-mode value function samples.
using ValueField = ModeField;
// m_i(t_k, s_m): per-mode density samples (nonnegative once a solve clips).
using DensityField = ModeField;

// Switching intensities alpha_{i->j}(t_k, s_m) for every ordered pair i != j.
// Pairs are enumerated row-major: (0,1),(0,2),...,(1,0),(1,2),... so that
// pair_index(i,j) = i*(modes-1) + (j < i ? j : j-1).
class ControlField {
 public:
  ControlField() = default;
  ControlField(int modes, const GridSpec& grid)
      : modes_(modes), grid_(grid),
        data_(static_cast<size_t>(modes) * (modes - 1) * (grid.nt + 1) * (grid.ns + 1), 0.0) {}

  int modes() const { return modes_; }
  int pairs() const { return modes_ * (modes_ - 1); }
  const GridSpec& grid() const { return grid_; }

  int pair_index(int i, int j) const { return i * (modes_ - 1) + (j < i ? j : j - 1); }

  double& at(int i, int j, int k, int m) { return data_[index(pair_index(i, j), k, m)]; }
  double at(int i, int j, int k, int m) const { return data_[index(pair_index(i, j), k, m)]; }

  double* row(int i, int j, int k) { return data_.data() + index(pair_index(i, j), k, 0); }
  const double* row(int i, int j, int k) const { return data_.data() + index(pair_index(i, j), k, 0); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  size_t index(int p, int k, int m) const {
    return (static_cast<size_t>(p) * (grid_.nt + 1) + k) * (grid_.ns + 1) + m;
  }

  int modes_ = 0;
  GridSpec grid_{};
  std::vector<double> data_;
};

// Congestion multiplier as a per-mode piecewise-constant density in time:
// the measure of cell [t_k, t_{k+1}) is density(i,k) * dt.  Time-only; no
// space dependence.
class MultiplierPath {
 public:
  MultiplierPath() = default;
  MultiplierPath(int modes, const GridSpec& grid)
      : modes_(modes), cells_(grid.nt), dt_(grid.dt()),
        density_(static_cast<size_t>(modes) * grid.nt, 0.0) {}

  int modes() const { return modes_; }
  int cells() const { return cells_; }
  double dt() const { return dt_; }

  double& density(int i, int k) { return density_[static_cast<size_t>(i) * cells_ + k]; }
  double density(int i, int k) const { return density_[static_cast<size_t>(i) * cells_ + k]; }

  // Total variation-free mass: sum of |density| * dt over all modes and cells.
  double mass() const {
    double acc = 0.0;
    for (double d : density_) acc += (d < 0 ? -d : d) * dt_;
    return acc;
  }

  // Measure of [t_k, T] for mode i: sum over cells q >= k of density * dt.
  double tail_mass(int i, int k) const {
    double acc = 0.0;
    for (int q = k; q < cells_; ++q) acc += density(i, q) * dt_;
    return acc;
  }

  // tail[i][k] = tail_mass(i,k) for k = 0..cells (tail[cells] = 0).
  std::vector<double> tail_table() const {
    std::vector<double> tail(static_cast<size_t>(modes_) * (cells_ + 1), 0.0);
    for (int i = 0; i < modes_; ++i)
      for (int k = cells_ - 1; k >= 0; --k)
        tail[static_cast<size_t>(i) * (cells_ + 1) + k] =
            tail[static_cast<size_t>(i) * (cells_ + 1) + k + 1] + density(i, k) * dt_;
    return tail;
  }

  std::vector<double>& raw() { return density_; }
  const std::vector<double>& raw() const { return density_; }

 private:
  int modes_ = 0;
  int cells_ = 0;
  double dt_ = 0.0;
  std::vector<double> density_;
};

}  // namespace mfc
