#pragma once

#include <array>
#include <string>

#include "refsim/image.hpp"

namespace refsim {

using Vec3 = std::array<double, 3>;

/// 3x3 real matrix, row-major.
struct Matrix3 {
    std::array<double, 9> m{};

    static Matrix3 identity();
    static Matrix3 diagonal(const Vec3& d);

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Matrix3 operator*(const Matrix3& rhs) const;
    Vec3 operator*(const Vec3& v) const;
    Matrix3 operator+(const Matrix3& rhs) const;
    Matrix3 scaled(double s) const;

    double determinant() const;
    Matrix3 inverse() const;  // throws on singular input
};

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
/// Angle in radians between two non-zero vectors.
double angle_between(const Vec3& a, const Vec3& b);

/// Dual-illuminant camera profile: XYZ -> camera matrices at two
/// calibration temperatures, temp_1 > temp_2 (e.g. D65 and Illuminant A).
struct CameraProfile {
    Matrix3 color_matrix_1;
    Matrix3 color_matrix_2;
    double calibration_temp_1 = 6500.0;
    double calibration_temp_2 = 2850.0;

    void validate() const;
};

CameraProfile load_camera_profile(const std::string& path);
void save_camera_profile(const CameraProfile& profile, const std::string& path);

/// D50 chromaticity constant.
XyCoord d50_xy();

/// Planckian (Robertson-locus) chromaticity for a temperature in [1667, 25000] K.
XyCoord temperature_to_xy(double kelvin);

/// Correlated color temperature (kelvin) of a chromaticity, Robertson method.
double xy_to_temperature(const XyCoord& xy);

/// XYZ triple with Y = 1: (x/y, 1, (1-x-y)/y).
Vec3 xy_to_xyz(const XyCoord& xy);

/// Bradford chromatic-adaptation transform mapping XYZ under `from`
/// to XYZ under `to`.
Matrix3 map_white_matrix(const XyCoord& from, const XyCoord& to);

/// XYZ -> camera matrix interpolated between the profile's two calibration
/// illuminants, linear in mired and clamped.
Matrix3 find_xyz_to_cam(const XyCoord& white, const CameraProfile& profile);

struct NeutralProjection {
    XyCoord white_xy;
    Matrix3 xyz_to_cam;
    double kelvin = 0.0;
};

/// Projects a camera-space neutral onto the Planckian locus: sweeps kelvin in
/// 1-mired steps, keeping the candidate whose camera-space projection is
/// closest (angular) to the neutral. Returns the white and its XYZ->camera.
NeutralProjection neutral_to_xy(const Vec3& neutral, const CameraProfile& profile);

/// Fixed XYZ(D50) -> linear sRGB matrix.
Matrix3 xyz_d50_to_srgb();

/// XYZ under `white` -> linear sRGB: xyz_d50_to_srgb() * map_white_matrix(white -> D50).
Matrix3 xyz_to_srgb_matrix(const XyCoord& white);

/// Per-pixel, per-channel clip of a camera-space image to camera_white.
LinearImage highlight_recovery(const LinearImage& img, const Vec3& camera_white);

/// Inverse of the sRGB encode curve; input must be in [0,1].
double srgb_to_linear(double v);

/// Applies a 3x3 color transform to every pixel (channels as a column vector).
LinearImage apply_matrix(const Matrix3& mat, const LinearImage& img, ColorSpace out_space);

}  // namespace refsim
