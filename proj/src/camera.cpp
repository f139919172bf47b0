#include "splat6d/camera.hpp"

#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "splat6d/error.hpp"

namespace splat6d {

double Camera::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

void Camera::validate() const {
    if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) {
        throw Error(ErrorCode::InvalidParameter, "fov_y must lie in (0, pi)");
    }
    if (!(near > 0.0 && near < far)) throw Error(ErrorCode::InvalidParameter, "need 0 < near < far");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidParameter, "empty viewport");
    if (!(rotation * rotation.transpose()).isApprox(Mat3::Identity(), 1e-9) ||
        std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidParameter, "camera rotation is not a proper rotation");
    }
    if (!position.allFinite()) throw Error(ErrorCode::InvalidParameter, "camera position not finite");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                       int width, int height) {
    const Vec3 fwd_raw = target - eye;
    if (!(fwd_raw.norm() > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "eye equals target");
    const Vec3 forward = fwd_raw.normalized();
    const Vec3 right_raw = forward.cross(up);
    if (!(right_raw.norm() > 1e-12 * up.norm())) {
        throw Error(ErrorCode::DegenerateGeometry, "up vector parallel to view direction");
    }
    const Vec3 right = right_raw.normalized();
    const Vec3 down = forward.cross(right);
    Camera cam;
    cam.position = eye;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.fov_y = fov_y;
    cam.width = width;
    cam.height = height;
    return cam;
}

}  // namespace splat6d
