/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qew {

inline constexpr double gradient_check_tolerance = 1e-5;

/// Potential energy surface. The default gradient is a central finite
/// difference of energy().
class SurfaceModel {
public:
  virtual ~SurfaceModel() = default;
  virtual std::size_t dimension() const = 0;
  virtual double energy(const Eigen::VectorXd &point) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd &point) const;
  virtual std::string name() const = 0;
};

/// Largest |g - g_fd| / max(1, |g_fd|) over the points (central differences);
/// infinity when any value is non-finite.
double gradient_error(const SurfaceModel &surface, const std::vector<Eigen::VectorXd> &points);

/// sum_k A_k exp(a_k (x-x0_k)^2 + b_k (x-x0_k)(y-y0_k) + c_k (y-y0_k)^2)
class MuellerBrownSurface : public SurfaceModel {
public:
  struct Term {
    double amplitude, a, b, c, x0, y0;
  };
  explicit MuellerBrownSurface(std::vector<Term> terms);
  std::size_t dimension() const override { return 2; }
  double energy(const Eigen::VectorXd &p) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd &p) const override;
  std::string name() const override { return "muller_brown"; }

private:
  std::vector<Term> terms_;
};

/// Three-atom LEPS energy in (r_AB, r_BC) with the middle atom coupled to a
/// harmonic oscillator coordinate x; r_AC is fixed.
class LepsOscillatorSurface : public SurfaceModel {
public:
  struct Parameters {
    double a = 0.05, b = 0.30, c = 0.05;
    double d_ab = 4.746, d_bc = 4.746, d_ac = 3.445;
    double r0 = 0.742, alpha = 1.942;
    double r_ac = 3.742, k_c = 0.2025, c_osc = 1.154;
  };
  explicit LepsOscillatorSurface(Parameters p) : p_(p) {}
  std::size_t dimension() const override { return 2; }
  double energy(const Eigen::VectorXd &p) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd &p) const override;
  std::string name() const override { return "leps_oscillator"; }

private:
  Parameters p_;
};

struct NebPath {
  std::vector<Eigen::VectorXd> images; // endpoints first and last
  std::vector<double> energies;
  double spring = 1.0;
  bool converged = false;
  std::size_t steps = 0;
  std::optional<std::size_t> climb_index;
  std::vector<double> force_history;        // max interior NEB force norm per step
  std::vector<double> climb_energy_history; // climbing-image energy per step
};

/// Linear interpolation with both endpoints; n_images >= 3.
NebPath interpolate_path(const Eigen::VectorXd &reactant, const Eigen::VectorXd &product,
                         std::size_t n_images, double spring = 1.0);

/// Fills path.energies (images evaluated in parallel).
void evaluate_path(NebPath &path, const SurfaceModel &surface);

/// Highest-energy interior image, lowest index on ties. Needs energies.
std::size_t highest_interior_image(const NebPath &path);

/// Improved-tangent unit vector of an interior image.
Eigen::VectorXd path_tangent(const NebPath &path, std::size_t i);

/// Per-image NEB forces (zero at the endpoints). Interior images get the
/// spring force k(|R+ - R| - |R - R-|) along the tangent plus the true force
/// perpendicular to it; with climbing, the climbing image (climb_index or
/// the highest interior image) gets the true force with its tangent
/// component inverted and no spring. Needs energies.
std::vector<Eigen::VectorXd> neb_forces(const NebPath &path, const SurfaceModel &surface,
                                        bool climbing,
                                        std::optional<std::size_t> climb_index = std::nullopt);

enum class StepRule { fire, quick_min };

struct NebConfig {
  std::size_t max_steps = 200;
  double force_tol = 1e-4;
  bool climbing = true;
  StepRule step_rule = StepRule::fire;
  double time_step = 1e-3;
  double max_time_step = 1e-2;
  double max_move = 0.05; // per image per step

  void validate() const;
};

/// A surface loaded from a data file, with its sampling box and suggested
/// reactant/product points.
struct SurfaceEntry {
  std::string name;
  std::shared_ptr<const SurfaceModel> surface;
  std::vector<std::pair<double, double>> domain; // per-coordinate [lo, hi]
  Eigen::VectorXd reactant, product;
  double max_gradient_error = 0.0; // from the load-time check
  double spring = 1.0;             // recommended spring constant
  NebConfig neb;                   // recommended step settings
};

/// Parses a surface JSON file and validates its gradient on a 7-point-per-
/// axis grid over the domain; throws std::invalid_argument when the error
/// exceeds gradient_check_tolerance.
SurfaceEntry load_surface(const std::filesystem::path &path);

/// `<directory>/<name>.json`.
SurfaceEntry surface_by_name(const std::filesystem::path &directory, const std::string &name);

/// Damped velocity descent on all interior images at once. The velocity is
/// zeroed whenever force . velocity < 0. Stops when the largest interior
/// force norm is below force_tol. Throws std::runtime_error on a non-finite
/// energy or force.
NebPath relax_path(NebPath path, const SurfaceModel &surface, const NebConfig &config = {});

struct Barrier {
  double activation = 0.0; // highest interior energy - first energy
  double reaction = 0.0;   // last energy - first energy
  std::size_t ts_index = 0;
  std::vector<std::string> warnings;
};

Barrier extract_barrier(const NebPath &path);

struct SaddleCharacter {
  double gradient_norm = 0.0;
  Eigen::VectorXd hessian_eigenvalues; // ascending
  int negative_count() const;
  bool first_order_saddle() const { return negative_count() == 1; }
};

/// Central finite-difference Hessian of the gradient (step h).
SaddleCharacter saddle_character(const SurfaceModel &surface, const Eigen::VectorXd &point,
                                 double h = 1e-4);

/// Newton iteration on the gradient with finite-difference Hessians.
Eigen::VectorXd refine_stationary_point(const SurfaceModel &surface, Eigen::VectorXd point,
                                        double tol = 1e-10, std::size_t max_iter = 50);

/// Sub-path between images start and end (inclusive), resampled to n_images
/// points equally spaced along the polyline; energies are cleared.
NebPath window_path(const NebPath &path, std::size_t start, std::size_t end,
                    std::size_t n_images);

/// `image,x0,..,x{d-1},energy` with a header row.
std::string write_path_csv(const NebPath &path);
NebPath parse_path_csv(std::string_view text);

nlohmann::json neb_report(const NebPath &path, const Barrier &barrier, const NebConfig &config);

} // namespace qew
