#include "refsim/color.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace refsim {

using nlohmann::json;

Matrix3 Matrix3::identity() {
    Matrix3 r;
    r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
}

Matrix3 Matrix3::diagonal(const Vec3& d) {
    Matrix3 r;
    r.m = {d[0], 0, 0, 0, d[1], 0, 0, 0, d[2]};
    return r;
}

Matrix3 Matrix3::operator*(const Matrix3& rhs) const {
    Matrix3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(r, k) * rhs(k, c);
            out(r, c) = s;
        }
    return out;
}

Vec3 Matrix3::operator*(const Vec3& v) const {
    Vec3 out{};
    for (int r = 0; r < 3; ++r)
        out[r] = (*this)(r, 0) * v[0] + (*this)(r, 1) * v[1] + (*this)(r, 2) * v[2];
    return out;
}

Matrix3 Matrix3::operator+(const Matrix3& rhs) const {
    Matrix3 out;
    for (int i = 0; i < 9; ++i) out.m[i] = m[i] + rhs.m[i];
    return out;
}

Matrix3 Matrix3::scaled(double s) const {
    Matrix3 out;
    for (int i = 0; i < 9; ++i) out.m[i] = m[i] * s;
    return out;
}

double Matrix3::determinant() const {
    const auto& a = m;
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Matrix3 Matrix3::inverse() const {
    const double det = determinant();
    if (std::abs(det) < 1e-15) throw std::runtime_error("singular color matrix");
    const auto& a = m;
    Matrix3 out;
    out.m = {
        (a[4] * a[8] - a[5] * a[7]) / det, (a[2] * a[7] - a[1] * a[8]) / det,
        (a[1] * a[5] - a[2] * a[4]) / det, (a[5] * a[6] - a[3] * a[8]) / det,
        (a[0] * a[8] - a[2] * a[6]) / det, (a[2] * a[3] - a[0] * a[5]) / det,
        (a[3] * a[7] - a[4] * a[6]) / det, (a[1] * a[6] - a[0] * a[7]) / det,
        (a[0] * a[4] - a[1] * a[3]) / det,
    };
    return out;
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double angle_between(const Vec3& a, const Vec3& b) {
    const double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

void CameraProfile::validate() const {
    if (!(calibration_temp_1 > calibration_temp_2))
        throw std::runtime_error("calibration_temp_1 must exceed calibration_temp_2");
    for (double t : {calibration_temp_1, calibration_temp_2})
        if (t < 1500.0 || t > 20000.0) throw std::runtime_error("calibration temperature out of range");
    (void)color_matrix_1.inverse();
    (void)color_matrix_2.inverse();
}

CameraProfile load_camera_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open camera profile: " + path);
    json j = json::parse(in);
    CameraProfile p;
    for (int i = 0; i < 9; ++i) {
        p.color_matrix_1.m[i] = j.at("color_matrix_1")[i].get<double>();
        p.color_matrix_2.m[i] = j.at("color_matrix_2")[i].get<double>();
    }
    p.calibration_temp_1 = j.at("calibration_temp_1").get<double>();
    p.calibration_temp_2 = j.at("calibration_temp_2").get<double>();
    p.validate();
    return p;
}

void save_camera_profile(const CameraProfile& profile, const std::string& path) {
    json j;
    j["color_matrix_1"] = profile.color_matrix_1.m;
    j["color_matrix_2"] = profile.color_matrix_2.m;
    j["calibration_temp_1"] = profile.calibration_temp_1;
    j["calibration_temp_2"] = profile.calibration_temp_2;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write camera profile: " + path);
    out << j.dump(2) << "\n";
}

XyCoord d50_xy() { return XyCoord{0.3457, 0.3585}; }

namespace {

// Robertson isotherm table: reciprocal temperature (mired), CIE 1960 u, v,
// and isotherm slope.
struct RuvtEntry {
    double r, u, v, t;
};

constexpr RuvtEntry kTempTable[] = {
    {0, 0.18006, 0.26352, -0.24341},    {10, 0.18066, 0.26589, -0.25479},
    {20, 0.18133, 0.26846, -0.26876},   {30, 0.18208, 0.27119, -0.28539},
    {40, 0.18293, 0.27407, -0.30470},   {50, 0.18388, 0.27709, -0.32675},
    {60, 0.18494, 0.28021, -0.35156},   {70, 0.18611, 0.28342, -0.37915},
    {80, 0.18740, 0.28668, -0.40955},   {90, 0.18880, 0.28997, -0.44278},
    {100, 0.19032, 0.29326, -0.47888},  {125, 0.19462, 0.30141, -0.58204},
    {150, 0.19962, 0.30921, -0.70471},  {175, 0.20525, 0.31647, -0.84901},
    {200, 0.21142, 0.32312, -1.0182},   {225, 0.21807, 0.32909, -1.2168},
    {250, 0.22511, 0.33439, -1.4512},   {275, 0.23247, 0.33904, -1.7298},
    {300, 0.24010, 0.34308, -2.0637},   {325, 0.24792, 0.34655, -2.4681},
    {350, 0.25591, 0.34951, -2.9641},   {375, 0.26400, 0.35200, -3.5814},
    {400, 0.27218, 0.35407, -4.3633},   {425, 0.28039, 0.35577, -5.3762},
    {450, 0.28863, 0.35714, -6.7262},   {475, 0.29685, 0.35823, -8.5955},
    {500, 0.30505, 0.35907, -11.324},   {525, 0.31320, 0.35968, -15.628},
    {550, 0.32129, 0.36011, -23.325},   {575, 0.32931, 0.36038, -40.770},
    {600, 0.33724, 0.36051, -116.45},
};
constexpr int kTempTableSize = static_cast<int>(sizeof(kTempTable) / sizeof(kTempTable[0]));

XyCoord uv_to_xy(double u, double v) {
    const double denom = u - 4.0 * v + 2.0;
    return XyCoord{1.5 * u / denom, v / denom};
}

void xy_to_uv(const XyCoord& xy, double& u, double& v) {
    const double denom = -2.0 * xy.x + 12.0 * xy.y + 3.0;
    u = 4.0 * xy.x / denom;
    v = 6.0 * xy.y / denom;
}

}  // namespace

XyCoord temperature_to_xy(double kelvin) {
    if (!(kelvin >= 1667.0 && kelvin <= 25000.0))
        throw std::invalid_argument("temperature out of [1667, 25000] K");
    const double r = 1.0e6 / kelvin;
    int hi = 1;
    while (hi < kTempTableSize - 1 && kTempTable[hi].r < r) ++hi;
    const RuvtEntry& a = kTempTable[hi - 1];
    const RuvtEntry& b = kTempTable[hi];
    const double f = (b.r - r) / (b.r - a.r);
    const double u = a.u * f + b.u * (1.0 - f);
    const double v = a.v * f + b.v * (1.0 - f);
    return uv_to_xy(u, v);
}

double xy_to_temperature(const XyCoord& xy) {
    double u, v;
    xy_to_uv(xy, u, v);
    auto isotherm_distance = [&](const RuvtEntry& e) {
        return ((v - e.v) - e.t * (u - e.u)) / std::sqrt(1.0 + e.t * e.t);
    };
    double prev_dt = isotherm_distance(kTempTable[0]);
    for (int i = 1; i < kTempTableSize; ++i) {
        const double dt = isotherm_distance(kTempTable[i]);
        if (dt <= 0.0 || i == kTempTableSize - 1) {
            const double f =
                (prev_dt == dt) ? 0.0 : std::clamp(prev_dt / (prev_dt - dt), 0.0, 1.0);
            const double mired = kTempTable[i - 1].r + f * (kTempTable[i].r - kTempTable[i - 1].r);
            return 1.0e6 / std::clamp(mired, 1.0e6 / 25000.0, 1.0e6 / 1667.0);
        }
        prev_dt = dt;
    }
    return 1667.0;  // unreachable
}

Vec3 xy_to_xyz(const XyCoord& xy) {
    if (!xy.valid()) throw std::invalid_argument("invalid chromaticity");
    return Vec3{xy.x / xy.y, 1.0, (1.0 - xy.x - xy.y) / xy.y};
}

namespace {

const Matrix3& bradford_matrix() {
    static const Matrix3 mb{{0.8951, 0.2664, -0.1614,   //
                             -0.7502, 1.7135, 0.0367,   //
                             0.0389, -0.0685, 1.0296}};
    return mb;
}

}  // namespace

Matrix3 map_white_matrix(const XyCoord& from, const XyCoord& to) {
    const Matrix3& mb = bradford_matrix();
    const Vec3 w1 = mb * xy_to_xyz(from);
    const Vec3 w2 = mb * xy_to_xyz(to);
    Vec3 ratio{};
    for (int i = 0; i < 3; ++i) {
        if (w1[i] <= 0.0 || w2[i] <= 0.0) throw std::runtime_error("non-positive cone response");
        ratio[i] = std::clamp(w2[i] / w1[i], 0.1, 10.0);
    }
    return mb.inverse() * Matrix3::diagonal(ratio) * mb;
}

Matrix3 find_xyz_to_cam(const XyCoord& white, const CameraProfile& profile) {
    if (profile.calibration_temp_1 == profile.calibration_temp_2) return profile.color_matrix_1;
    const double mired1 = 1.0e6 / profile.calibration_temp_1;
    const double mired2 = 1.0e6 / profile.calibration_temp_2;
    const double mired = 1.0e6 / xy_to_temperature(white);
    // weight of matrix_1, linear in mired, clamped
    const double w1 = std::clamp((mired2 - mired) / (mired2 - mired1), 0.0, 1.0);
    return profile.color_matrix_1.scaled(w1) + profile.color_matrix_2.scaled(1.0 - w1);
}

NeutralProjection neutral_to_xy(const Vec3& neutral, const CameraProfile& profile) {
    if (neutral[0] <= 0.0 || neutral[1] <= 0.0 || neutral[2] <= 0.0)
        throw std::invalid_argument("non-positive neutral");
    NeutralProjection best;
    double best_angle = 1e30;
    // 1-mired sweep over [1667, 25000] K
    const int mired_lo = 40;
    const int mired_hi = 599;
    for (int mired = mired_lo; mired <= mired_hi; ++mired) {
        const double kelvin = 1.0e6 / mired;
        const XyCoord xy = temperature_to_xy(kelvin);
        const Matrix3 xyz_to_cam = find_xyz_to_cam(xy, profile);
        const Vec3 projected = xyz_to_cam * xy_to_xyz(xy);
        const double a = angle_between(projected, neutral);
        if (a < best_angle) {
            best_angle = a;
            best = NeutralProjection{xy, xyz_to_cam, kelvin};
        }
    }
    return best;
}

Matrix3 xyz_d50_to_srgb() {
    // Inverse of the published linear sRGB -> XYZ(D50) primaries matrix.
    static const Matrix3 srgb_to_xyz_d50{{0.4361, 0.3851, 0.1431,   //
                                          0.2225, 0.7169, 0.0606,   //
                                          0.0139, 0.0971, 0.7141}};
    static const Matrix3 inv = srgb_to_xyz_d50.inverse();
    return inv;
}

Matrix3 xyz_to_srgb_matrix(const XyCoord& white) {
    return xyz_d50_to_srgb() * map_white_matrix(white, d50_xy());
}

LinearImage highlight_recovery(const LinearImage& img, const Vec3& camera_white) {
    LinearImage out = img;
    for (int ch = 0; ch < 3; ++ch) {
        const float cap = static_cast<float>(camera_white[ch]);
        float* p = out.plane(ch);
        const std::size_t n = static_cast<std::size_t>(out.width()) * out.height();
        for (std::size_t i = 0; i < n; ++i) p[i] = std::min(p[i], cap);
    }
    return out;
}

double srgb_to_linear(double v) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("encoded sRGB value out of [0,1]");
    if (v <= 12.92 * 0.0031308) return v / 12.92;
    return std::pow((v + 0.055) / 1.055, 2.4);
}

LinearImage apply_matrix(const Matrix3& mat, const LinearImage& img, ColorSpace out_space) {
    LinearImage out = img;
    out.set_color_space(out_space);
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    const float* r0 = img.plane(0);
    const float* r1 = img.plane(1);
    const float* r2 = img.plane(2);
    float* o0 = out.plane(0);
    float* o1 = out.plane(1);
    float* o2 = out.plane(2);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = r0[i], b = r1[i], c = r2[i];
        o0[i] = static_cast<float>(mat.m[0] * a + mat.m[1] * b + mat.m[2] * c);
        o1[i] = static_cast<float>(mat.m[3] * a + mat.m[4] * b + mat.m[5] * c);
        o2[i] = static_cast<float>(mat.m[6] * a + mat.m[7] * b + mat.m[8] * c);
    }
    return out;
}

}  // namespace refsim
