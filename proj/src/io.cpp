#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "samplecraft/io.hpp"

namespace samplecraft {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    return f;
}

void check_write(std::ostream& out, const std::string& what) {
    if (!out) throw IoError("failed writing " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

double parse_double(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || end != begin + s.size())
        throw IoError("malformed number '" + s + "' in " + what);
    return v;
}

long parse_long(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    long v = std::strtol(begin, &end, 10);
    if (end == begin || end != begin + s.size())
        throw IoError("malformed integer '" + s + "' in " + what);
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_points_csv(std::ostream& out, const PointSet& points) {
    points.validate();
    for (int d = 0; d < points.dim(); ++d) out << (d ? "," : "") << "dim" << d;
    out << "\n";
    for (int i = 0; i < points.count(); ++i) {
        for (int d = 0; d < points.dim(); ++d)
            out << (d ? "," : "") << format_double(points.coords(i, d));
        out << "\n";
    }
    check_write(out, "point CSV");
}

void write_points_csv(const std::string& path, const PointSet& points) {
    auto f = open_out(path);
    write_points_csv(f, points);
}

PointSet read_points_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw IoError("empty point CSV");
    auto header = split_csv(line);
    const int n = int(header.size());
    for (int d = 0; d < n; ++d)
        if (header[d] != "dim" + std::to_string(d))
            throw IoError("point CSV header must be dim0,dim1,...");
    std::vector<double> values;
    long rows = 0;
    while (next_line(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (int(fields.size()) != n)
            throw IoError("point CSV row " + std::to_string(rows + 1) + " has " +
                          std::to_string(fields.size()) + " fields, expected " + std::to_string(n));
        for (auto& f : fields) values.push_back(parse_double(f, "point CSV"));
        ++rows;
    }
    if (rows == 0) throw IoError("point CSV has no rows");
    Eigen::MatrixXd coords(rows, n);
    for (long i = 0; i < rows; ++i)
        for (int d = 0; d < n; ++d) coords(i, d) = values[size_t(i) * n + d];
    PointSet ps(std::move(coords));
    try {
        ps.validate();
    } catch (const std::exception& e) {
        throw IoError(std::string("invalid point CSV: ") + e.what());
    }
    return ps;
}

PointSet read_points_csv(const std::string& path) {
    auto f = open_in(path);
    return read_points_csv(f);
}

namespace {

void write_pgm(std::ostream& out, const Eigen::ArrayXXi& pixels, int maxval) {
    if (pixels.rows() < 1 || pixels.cols() < 1) throw UsageError("empty image");
    if ((pixels < 0).any() || (pixels > maxval).any())
        throw UsageError("pixel values out of range for PGM");
    out << "P5\n" << pixels.cols() << " " << pixels.rows() << "\n" << maxval << "\n";
    for (long r = 0; r < pixels.rows(); ++r)
        for (long c = 0; c < pixels.cols(); ++c) {
            int v = pixels(r, c);
            if (maxval > 255) out.put(char((v >> 8) & 0xff));
            out.put(char(v & 0xff));
        }
    check_write(out, "PGM");
}

int read_pgm_token(std::istream& in) {
    // Skips whitespace and '#' comments, then reads one decimal token.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw IoError("malformed PGM header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 28) throw IoError("PGM header value out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return int(v);
}

} // namespace

void write_pgm8(std::ostream& out, const Eigen::ArrayXXi& pixels) { write_pgm(out, pixels, 255); }

void write_pgm8(const std::string& path, const Eigen::ArrayXXi& pixels) {
    auto f = open_out(path);
    write_pgm8(f, pixels);
}

void write_pgm16(std::ostream& out, const Eigen::ArrayXXi& pixels) {
    write_pgm(out, pixels, 65535);
}

void write_pgm16(const std::string& path, const Eigen::ArrayXXi& pixels) {
    auto f = open_out(path);
    write_pgm16(f, pixels);
}

Eigen::ArrayXXi read_pgm(std::istream& in, int& maxval) {
    if (in.get() != 'P' || in.get() != '5') throw IoError("not a binary PGM (P5) file");
    int W = read_pgm_token(in);
    int H = read_pgm_token(in);
    maxval = read_pgm_token(in);
    if (W < 1 || H < 1 || maxval < 1 || maxval > 65535) throw IoError("invalid PGM dimensions");
    int c = in.get(); // single whitespace after maxval
    if (c == EOF || !std::isspace(c)) throw IoError("malformed PGM header");
    Eigen::ArrayXXi pixels(H, W);
    for (long r = 0; r < H; ++r)
        for (long col = 0; col < W; ++col) {
            int hi = maxval > 255 ? in.get() : 0;
            int lo = in.get();
            if (lo == EOF || (maxval > 255 && hi == EOF)) throw IoError("truncated PGM payload");
            pixels(r, col) = maxval > 255 ? (hi << 8) | lo : lo;
        }
    return pixels;
}

Eigen::ArrayXXi read_pgm(const std::string& path, int& maxval) {
    auto f = open_in(path);
    return read_pgm(f, maxval);
}

void write_radial_target_csv(std::ostream& out, const TargetSpectrum& target) {
    if (target.kind != TargetSpectrum::Kind::RadialTable)
        throw UsageError("only radial-table targets serialize to CSV");
    out << "radius,power\n";
    for (long i = 0; i < target.radii.size(); ++i)
        out << format_double(target.radii(i)) << "," << format_double(target.power(i)) << "\n";
    check_write(out, "radial target CSV");
}

void write_radial_target_csv(const std::string& path, const TargetSpectrum& target) {
    auto f = open_out(path);
    write_radial_target_csv(f, target);
}

TargetSpectrum read_radial_target_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line) || line != "radius,power")
        throw IoError("radial target CSV must start with header radius,power");
    std::vector<double> radii, power;
    while (next_line(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 2) throw IoError("radial target CSV rows need 2 fields");
        radii.push_back(parse_double(fields[0], "radial target CSV"));
        power.push_back(parse_double(fields[1], "radial target CSV"));
    }
    if (radii.empty()) throw IoError("radial target CSV has no rows");
    for (size_t i = 0; i < radii.size(); ++i) {
        if (power[i] < 0.0) throw IoError("radial target power values must be nonnegative");
        if (i > 0 && radii[i] <= radii[i - 1])
            throw IoError("radial target radii must be strictly increasing");
    }
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::RadialTable;
    t.radii = Eigen::Map<Eigen::ArrayXd>(radii.data(), long(radii.size()));
    t.power = Eigen::Map<Eigen::ArrayXd>(power.data(), long(power.size()));
    return t;
}

TargetSpectrum read_radial_target_csv(const std::string& path) {
    auto f = open_in(path);
    return read_radial_target_csv(f);
}

TargetSpectrum read_full_target_pgm(const std::string& path) {
    int maxval = 0;
    Eigen::ArrayXXi pixels = read_pgm(path, maxval);
    if (maxval != 65535) throw IoError("full spectral targets must be 16-bit PGM");
    if (pixels.rows() != pixels.cols() || pixels.rows() % 2 == 0)
        throw IoError("full spectral targets must be square with odd side 2K+1");
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::FullTable;
    t.full_K = int((pixels.rows() - 1) / 2);
    t.full = pixels.cast<double>() / 32768.0;
    return t;
}

void write_pcf_csv(std::ostream& out, const PcfHistogram& pcf) {
    out << "# pcf bins=" << pcf.bins << " r_max=" << format_double(pcf.r_max) << " h="
        << format_double(pcf.h) << "\n";
    out << "r,density\n";
    double bw = pcf.binwidth();
    for (int b = 0; b < pcf.bins; ++b)
        out << format_double((b + 0.5) * bw) << "," << format_double(pcf.density(b)) << "\n";
    check_write(out, "pcf CSV");
}

void write_pcf_csv(const std::string& path, const PcfHistogram& pcf) {
    auto f = open_out(path);
    write_pcf_csv(f, pcf);
}

PcfHistogram read_pcf_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line) || line.rfind("# pcf ", 0) != 0)
        throw IoError("pcf CSV must start with a '# pcf' settings line");
    PcfHistogram pcf;
    bool saw_bins = false, saw_rmax = false, saw_h = false;
    std::istringstream header(line.substr(6));
    std::string token;
    while (header >> token) {
        size_t eq = token.find('=');
        if (eq == std::string::npos) throw IoError("malformed pcf settings token '" + token + "'");
        std::string key = token.substr(0, eq), val = token.substr(eq + 1);
        if (key == "bins") {
            pcf.bins = int(parse_long(val, "pcf settings"));
            saw_bins = true;
        } else if (key == "r_max") {
            pcf.r_max = parse_double(val, "pcf settings");
            saw_rmax = true;
        } else if (key == "h") {
            pcf.h = parse_double(val, "pcf settings");
            saw_h = true;
        } else {
            throw IoError("unknown pcf settings key '" + key + "'");
        }
    }
    if (!saw_bins || !saw_rmax || !saw_h)
        throw IoError("pcf settings line needs bins, r_max and h");
    if (pcf.bins < 1) throw IoError("pcf CSV bin count must be positive");
    if (!next_line(in, line) || line != "r,density")
        throw IoError("pcf CSV needs header r,density after the settings line");
    pcf.density = Eigen::ArrayXd::Zero(pcf.bins);
    int row = 0;
    while (next_line(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 2) throw IoError("pcf CSV rows need 2 fields");
        if (row >= pcf.bins) throw IoError("pcf CSV has more rows than bins");
        double d = parse_double(fields[1], "pcf CSV");
        if (d < 0.0) throw IoError("pcf densities must be nonnegative");
        pcf.density(row++) = d;
    }
    if (row != pcf.bins) throw IoError("pcf CSV row count does not match bins");
    return pcf;
}

PcfHistogram read_pcf_csv(const std::string& path) {
    auto f = open_in(path);
    return read_pcf_csv(f);
}

void write_radial_profile_csv(std::ostream& out, const RadialProfile& profile) {
    out << "r,mean_power,anisotropy,count\n";
    for (int b = 0; b < profile.bins; ++b) {
        out << format_double(profile.centers(b)) << ",";
        if (profile.count(b) == 0)
            out << "nan,nan";
        else
            out << format_double(profile.mean(b)) << "," << format_double(profile.anisotropy(b));
        out << "," << profile.count(b) << "\n";
    }
    check_write(out, "radial profile CSV");
}

void write_radial_profile_csv(const std::string& path, const RadialProfile& profile) {
    auto f = open_out(path);
    write_radial_profile_csv(f, profile);
}

void write_loss_history_csv(std::ostream& out, const std::vector<LossRecord>& history) {
    out << "step,loss,lr\n";
    for (const auto& rec : history)
        out << rec.step << "," << format_double(rec.loss) << "," << format_double(rec.lr) << "\n";
    check_write(out, "loss history CSV");
}

void write_loss_history_csv(const std::string& path, const std::vector<LossRecord>& history) {
    auto f = open_out(path);
    write_loss_history_csv(f, history);
}

ImageTask load_image_task(const std::string& path) {
    int maxval = 0;
    Eigen::ArrayXXi pixels = read_pgm(path, maxval);
    return make_image_task(pixels.cast<double>() / double(maxval));
}

} // namespace samplecraft
