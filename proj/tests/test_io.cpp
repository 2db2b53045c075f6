#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "samplecraft/io.hpp"
#include "samplecraft/samplers.hpp"
#include "support.hpp"

using namespace samplecraft;
using test_support::points_from;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("samplecraft_test_" + name);
}

} // namespace

TEST_CASE("format_double survives a strtod round trip") {
    for (double v : {1.0 / 3.0, 0.1, 1e-300, 4e-320, 3.141592653589793, 1.7976931348623157e308,
                     -0.4999999999999999, 123456789.123456789, 0.0}) {
        std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
        CHECK(format_double(v) == s);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("point CSV round trip is bit exact") {
    auto ps = random_points(37, 3, 7);
    std::ostringstream out;
    write_points_csv(out, ps);
    CHECK(out.str().rfind("dim0,dim1,dim2\n", 0) == 0);

    std::istringstream in(out.str());
    PointSet back = read_points_csv(in);
    CHECK(back.coords == ps.coords);
    CHECK(back.dim() == 3);
    CHECK(back.count() == 37);
}

TEST_CASE("point CSV error handling") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_points_csv(in);
    };
    CHECK_THROWS_AS(parse(""), IoError);
    CHECK_THROWS_AS(parse("x,y\n0.1,0.2\n"), IoError);
    CHECK_THROWS_AS(parse("dim0,dim1\n"), IoError);
    CHECK_THROWS_AS(parse("dim0,dim1\n0.1\n"), IoError);
    CHECK_THROWS_AS(parse("dim0,dim1\n0.1,abc\n"), IoError);
    CHECK_THROWS_AS(parse("dim0\n1.5\n"), IoError);   // out of the unit domain
    CHECK_THROWS_AS(read_points_csv("/no/such/file.csv"), IoError);

    // blank lines and CRLF endings are tolerated
    std::istringstream in("dim0,dim1\r\n0.25,0.75\r\n\r\n");
    PointSet ps = read_points_csv(in);
    CHECK(ps.count() == 1);
    CHECK(ps.coords(0, 1) == 0.75);
}

TEST_CASE("pgm8 round trip") {
    Eigen::ArrayXXi img(2, 3);
    img << 0, 128, 255, 7, 42, 99;
    std::ostringstream out;
    write_pgm8(out, img);

    std::istringstream in(out.str());
    int maxval = 0;
    Eigen::ArrayXXi back = read_pgm(in, maxval);
    CHECK(maxval == 255);
    CHECK((back == img).all());
}

TEST_CASE("pgm16 round trip and big-endian payload") {
    Eigen::ArrayXXi img(1, 2);
    img << 0x1234, 65535;
    std::ostringstream out;
    write_pgm16(out, img);
    std::string bytes = out.str();
    REQUIRE(bytes.size() >= 4);
    CHECK(uint8_t(bytes[bytes.size() - 4]) == 0x12);
    CHECK(uint8_t(bytes[bytes.size() - 3]) == 0x34);
    CHECK(uint8_t(bytes[bytes.size() - 2]) == 0xff);
    CHECK(uint8_t(bytes[bytes.size() - 1]) == 0xff);

    std::istringstream in(bytes);
    int maxval = 0;
    Eigen::ArrayXXi back = read_pgm(in, maxval);
    CHECK(maxval == 65535);
    CHECK((back == img).all());
}

TEST_CASE("pgm reader accepts comments and rejects damage") {
    std::string good = "P5\n# a comment\n2 1\n# another\n255\n\x01\x02";
    std::istringstream in(good);
    int maxval = 0;
    Eigen::ArrayXXi img = read_pgm(in, maxval);
    CHECK(maxval == 255);
    CHECK(img(0, 0) == 1);
    CHECK(img(0, 1) == 2);

    auto parse = [](const std::string& text) {
        std::istringstream s(text);
        int mv = 0;
        return read_pgm(s, mv);
    };
    CHECK_THROWS_AS(parse("P2\n1 1\n255\n\x05"), IoError);        // ASCII PGM
    CHECK_THROWS_AS(parse("P5\n1 1\n255\n"), IoError);            // truncated payload
    CHECK_THROWS_AS(parse(std::string("P5\n2 2\n65535\n\x00\x01", 13)), IoError);
    CHECK_THROWS_AS(parse("P5\n0 1\n255\n"), IoError);            // zero size
    CHECK_THROWS_AS(parse("P5\n1 1\n99999\n\x01\x01"), IoError);  // maxval too large
    CHECK_THROWS_AS(parse("P5\n1 x\n255\n\x05"), IoError);        // junk in header

    Eigen::ArrayXXi bad(1, 1);
    bad << 256;
    std::ostringstream sink;
    CHECK_THROWS_AS(write_pgm8(sink, bad), UsageError);
    bad << -1;
    CHECK_THROWS_AS(write_pgm16(sink, bad), UsageError);
}

TEST_CASE("radial target CSV round trip") {
    TargetSpectrum t;
    t.kind = TargetSpectrum::Kind::RadialTable;
    t.radii = Eigen::ArrayXd::LinSpaced(5, 0.0, 12.0);
    t.power = Eigen::ArrayXd(5);
    t.power << 0.0, 0.1, 1.0 / 3.0, 0.9, 1.05;

    std::ostringstream out;
    write_radial_target_csv(out, t);
    std::istringstream in(out.str());
    TargetSpectrum back = read_radial_target_csv(in);
    CHECK(back.kind == TargetSpectrum::Kind::RadialTable);
    CHECK((back.radii == t.radii).all());
    CHECK((back.power == t.power).all());

    TargetSpectrum builtin = builtin_target("bn");
    CHECK_THROWS_AS(write_radial_target_csv(out, builtin), UsageError);

    auto parse = [](const std::string& text) {
        std::istringstream s(text);
        return read_radial_target_csv(s);
    };
    CHECK_THROWS_AS(parse("r,p\n1,1\n"), IoError);
    CHECK_THROWS_AS(parse("radius,power\n"), IoError);
    CHECK_THROWS_AS(parse("radius,power\n1,0.5\n1,0.6\n"), IoError);  // not increasing
    CHECK_THROWS_AS(parse("radius,power\n1,-0.5\n"), IoError);
    CHECK_THROWS_AS(parse("radius,power\n1,0.5,9\n"), IoError);
}

TEST_CASE("full spectral target from 16-bit pgm") {
    auto path = temp_file("full_target.pgm");
    Eigen::ArrayXXi img(5, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) img(r, c) = 4096 * (r + c);
    write_pgm16(path.string(), img);

    TargetSpectrum t = read_full_target_pgm(path.string());
    CHECK(t.kind == TargetSpectrum::Kind::FullTable);
    CHECK(t.full_K == 2);
    CHECK(t.full(0, 0) == 0.0);
    CHECK(t.full(2, 3) == doctest::Approx(4096.0 * 5 / 32768.0).epsilon(1e-15));
    std::filesystem::remove(path);

    auto path8 = temp_file("full_target8.pgm");
    Eigen::ArrayXXi small(3, 3);
    small.setConstant(10);
    write_pgm8(path8.string(), small);
    CHECK_THROWS_AS(read_full_target_pgm(path8.string()), IoError);  // not 16-bit
    std::filesystem::remove(path8);

    auto even = temp_file("full_target_even.pgm");
    Eigen::ArrayXXi four(4, 4);
    four.setConstant(10);
    write_pgm16(even.string(), four);
    CHECK_THROWS_AS(read_full_target_pgm(even.string()), IoError);   // even side
    std::filesystem::remove(even);
}

TEST_CASE("pcf CSV round trip keeps the estimator settings") {
    auto ps = random_points(64, 2, 11);
    PcfHistogram pcf = pcf_histogram(ps, 32, 0.25, 0.01);

    std::ostringstream out;
    write_pcf_csv(out, pcf);
    CHECK(out.str().rfind("# pcf bins=32 r_max=0.25 h=0.01", 0) == 0);

    std::istringstream in(out.str());
    PcfHistogram back = read_pcf_csv(in);
    CHECK(back.bins == 32);
    CHECK(back.r_max == 0.25);
    CHECK(back.h == 0.01);
    CHECK((back.density == pcf.density).all());

    auto parse = [](const std::string& text) {
        std::istringstream s(text);
        return read_pcf_csv(s);
    };
    CHECK_THROWS_AS(parse("r,density\n0.1,1\n"), IoError);                       // no settings
    CHECK_THROWS_AS(parse("# pcf bins=2 r_max=0.5\nr,density\n0.1,1\n0.2,1\n"), IoError);
    CHECK_THROWS_AS(parse("# pcf bins=2 r_max=0.5 h=0.1 q=3\nr,density\n0.1,1\n0.2,1\n"),
                    IoError);
    CHECK_THROWS_AS(parse("# pcf bins=2 r_max=0.5 h=0.1\nr,density\n0.1,1\n"), IoError);
    CHECK_THROWS_AS(
        parse("# pcf bins=1 r_max=0.5 h=0.1\nr,density\n0.1,1\n0.2,1\n0.3,1\n"), IoError);
    CHECK_THROWS_AS(parse("# pcf bins=1 r_max=0.5 h=0.1\nr,density\n0.1,-1\n"), IoError);
}

TEST_CASE("radial profile CSV prints nan for empty bins") {
    RadialProfile p;
    p.bins = 2;
    p.binwidth = 1.0;
    p.centers = Eigen::ArrayXd(2);
    p.centers << 0.5, 1.5;
    p.mean = Eigen::ArrayXd(2);
    p.mean << 0.75, std::nan("");
    p.anisotropy = Eigen::ArrayXd(2);
    p.anisotropy << 0.25, std::nan("");
    p.count = Eigen::ArrayXi(2);
    p.count << 8, 0;

    std::ostringstream out;
    write_radial_profile_csv(out, p);
    CHECK(out.str() ==
          "r,mean_power,anisotropy,count\n"
          "0.5,0.75,0.25,8\n"
          "1.5,nan,nan,0\n");
}

TEST_CASE("loss history CSV") {
    std::vector<LossRecord> hist{{0, 0.5, 1e-6}, {1, 0.25, 9.9999999999999995e-07}};
    std::ostringstream out;
    write_loss_history_csv(out, hist);
    CHECK(out.str() ==
          "step,loss,lr\n"
          "0,0.5,9.9999999999999995e-07\n"
          "1,0.25,9.9999999999999995e-07\n");
}

TEST_CASE("image task loads from pgm with values scaled to the unit range") {
    auto path = temp_file("task.pgm");
    Eigen::ArrayXXi img(2, 2);
    img << 0, 255, 255, 0;
    write_pgm8(path.string(), img);

    ImageTask task = load_image_task(path.string());
    CHECK(task.W == 2);
    CHECK(task.H == 2);
    CHECK(task.img(0, 0) == 0.0);
    CHECK(task.img(0, 1) == 1.0);
    CHECK(task.exact_mean == doctest::Approx(0.5).epsilon(1e-15));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_image_task("/no/such/task.pgm"), IoError);
}
