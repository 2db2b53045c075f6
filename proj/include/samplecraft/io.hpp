#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "samplecraft/losses.hpp"
#include "samplecraft/pointset.hpp"

namespace samplecraft {

// Round-trip exact decimal form (17 significant digits); the one formatter
// behind every floating-point byte we emit, so identical values always
// serialize identically.
std::string format_double(double v);

// Point-set CSV: header dim0,dim1,..., one row per point.
void write_points_csv(std::ostream& out, const PointSet& points);
void write_points_csv(const std::string& path, const PointSet& points);
PointSet read_points_csv(std::istream& in);
PointSet read_points_csv(const std::string& path);

// Binary PGM (P5). 8-bit variant expects values in [0,255], 16-bit in
// [0,65535] (big-endian payload). read_pgm reports the file's maxval.
void write_pgm8(std::ostream& out, const Eigen::ArrayXXi& pixels);
void write_pgm8(const std::string& path, const Eigen::ArrayXXi& pixels);
void write_pgm16(std::ostream& out, const Eigen::ArrayXXi& pixels);
void write_pgm16(const std::string& path, const Eigen::ArrayXXi& pixels);
Eigen::ArrayXXi read_pgm(std::istream& in, int& maxval);
Eigen::ArrayXXi read_pgm(const std::string& path, int& maxval);

// Radial spectral target: CSV radius,power.
void write_radial_target_csv(std::ostream& out, const TargetSpectrum& target);
void write_radial_target_csv(const std::string& path, const TargetSpectrum& target);
TargetSpectrum read_radial_target_csv(std::istream& in);
TargetSpectrum read_radial_target_csv(const std::string& path);

// Full 2D spectral target from a 16-bit PGM with power = pixel / 2^15.
TargetSpectrum read_full_target_pgm(const std::string& path);

// PCF target CSV: one comment line carrying the estimator settings
// (# pcf bins=... r_max=... h=...), then header r,density and the rows.
void write_pcf_csv(std::ostream& out, const PcfHistogram& pcf);
void write_pcf_csv(const std::string& path, const PcfHistogram& pcf);
PcfHistogram read_pcf_csv(std::istream& in);
PcfHistogram read_pcf_csv(const std::string& path);

// Radial profile CSV: r,mean_power,anisotropy,count. Empty bins print nan.
void write_radial_profile_csv(std::ostream& out, const RadialProfile& profile);
void write_radial_profile_csv(const std::string& path, const RadialProfile& profile);

// Training history CSV: step,loss,lr.
struct LossRecord {
    long step;
    double loss;
    double lr;
};
void write_loss_history_csv(std::ostream& out, const std::vector<LossRecord>& history);
void write_loss_history_csv(const std::string& path, const std::vector<LossRecord>& history);

// Grayscale image task from a PGM, values scaled to [0,1] by maxval.
ImageTask load_image_task(const std::string& path);

} // namespace samplecraft
