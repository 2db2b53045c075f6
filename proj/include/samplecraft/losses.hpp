#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "samplecraft/pointset.hpp"

namespace samplecraft {

// Periodogram on the integer frequency lattice ||k||_inf <= K. Full tables
// are kept for n <= 2: for n == 1, P is (2K+1) x 1; for n == 2, P(a, b) holds
// frequency (a - K, b - K). Higher dimensions go through 2D projections.
struct Spectrum {
    int n = 0;
    int K = 0;
    long N = 0; // sample count it was computed from
    Eigen::ArrayXXd P;

    long lattice_size() const;
};

// P(k) = |sum_j exp(-2 pi i k . x_j)|^2 / N.
Spectrum periodogram(const PointSet& points, int K);

// Default lattice extent for a point count.
int default_K(long N);

// Radial reduction of a spectrum. Bins partition (0, K*sqrt(n)] uniformly;
// the DC term is excluded. Empty bins have count 0 and NaN statistics.
struct RadialProfile {
    int bins = 0;
    double binwidth = 0;
    Eigen::ArrayXd centers;    // bin midpoints in lattice units
    Eigen::ArrayXd mean;       // mean power per bin
    Eigen::ArrayXd variance;   // population variance per bin
    Eigen::ArrayXd anisotropy; // variance / max(mean, 1e-8)^2
    Eigen::ArrayXi count;
};

RadialProfile radial_stats(const Spectrum& spec, int bins);

// Spectral target: radial table with linear interpolation, full 2D table,
// or a builtin analytic shape (bn | jitter | green | pink) parameterized by
// the measured set's point count.
struct TargetSpectrum {
    enum class Kind { RadialTable, FullTable, Builtin };
    Kind kind = Kind::Builtin;
    std::string builtin = "bn";
    Eigen::ArrayXd radii, power; // radial table knots
    Eigen::ArrayXXd full;        // (2K+1) x (2K+1)
    int full_K = 0;

    // Radial lookup at lattice radius r for a set of N points in dimension n.
    double value(double r, long N, int n) const;
    bool is_full() const { return kind == Kind::FullTable; }
};

TargetSpectrum builtin_target(const std::string& name);

// Radius of the builtin blue-noise step for N points in dimension n.
double bn_step_radius(long N, int n);

// Mean over lattice k != 0 of (Pbar(k) - T(k))^2, Pbar batch-averaged.
// When xbar is non-null it is resized like the batch and receives
// d(loss)/d(coords).
double spectral_loss(const std::vector<PointSet>& batch, const TargetSpectrum& target, int K,
                     std::vector<Eigen::MatrixXd>* xbar = nullptr);

// Sum of 2D spectral losses over the listed dimension pairs.
double projected_spectral_loss(const std::vector<PointSet>& batch, const TargetSpectrum& target,
                               int K, const std::vector<std::pair<int, int>>& dim_pairs,
                               std::vector<Eigen::MatrixXd>* xbar = nullptr);

// Mean over nonempty radial bins of Var/max(Mean, 1e-8)^2 of the
// batch-averaged periodogram. Dimensions above 2 sum over all 2D
// projections.
double anisotropy_loss(const std::vector<PointSet>& batch, int K, int bins,
                       std::vector<Eigen::MatrixXd>* xbar = nullptr);

// Smoothed pair-correlation histogram. Each point pair within
// r_max + 3h deposits a unit-mass Gaussian bump (renormalized to the
// histogram range), integrated bin-wise; densities are mass / binwidth.
struct PcfHistogram {
    int bins = 128;
    double r_max = 0;
    double h = 0;
    Eigen::ArrayXd density;

    double binwidth() const { return r_max / bins; }
};

double default_pcf_rmax(int n);
PcfHistogram pcf_histogram(const PointSet& points, int bins, double r_max, double h);

// Mean squared bin difference between the batch-averaged histogram and the
// target; the target must carry identical estimator settings.
double differential_loss(const std::vector<PointSet>& batch, const PcfHistogram& target,
                         std::vector<Eigen::MatrixXd>* xbar = nullptr);

// Random Gaussian integrand on the torus; evaluation wraps one image in
// each direction per dimension, which keeps the analytic integral exact.
struct GaussianTask {
    Eigen::RowVectorXd center;
    double s = 0.1;
    double a = 1.0;

    double integral() const;
    double eval(const Eigen::RowVectorXd& x) const;
};

std::vector<GaussianTask> sample_gaussian_tasks(int count, int n, uint64_t seed, double s_lo = 0.05,
                                                double s_hi = 0.25);

// Mean over batch items and tasks of (F - Fbar)^2, where F is the analytic
// integral and Fbar the Monte Carlo estimate from the points.
double discrepancy_loss(const std::vector<PointSet>& batch, const std::vector<GaussianTask>& tasks,
                        std::vector<Eigen::MatrixXd>* xbar = nullptr);

// Grayscale integration task: compare the exact texel mean against the
// Monte Carlo estimate from toroidal bilinear fetches. 2D only; dimension 0
// indexes columns, dimension 1 rows.
struct ImageTask {
    int W = 0, H = 0;
    Eigen::ArrayXXd img; // H x W, values in [0,1]
    double exact_mean = 0;
};

ImageTask make_image_task(Eigen::ArrayXXd img);

double task_integral_loss(const std::vector<PointSet>& batch, const ImageTask& task,
                          std::vector<Eigen::MatrixXd>* xbar = nullptr);

} // namespace samplecraft
