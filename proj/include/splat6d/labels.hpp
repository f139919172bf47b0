#pragma once

#include <array>
#include <string_view>

#include "splat6d/volume.hpp"

namespace splat6d {

inline constexpr int kMaxRawLabel = 119;

enum Group : int {
    kBackground = 0,
    kSpleen = 1,
    kLiver = 2,
    kDigestive = 3,
    kGland = 4,
    kLung = 5,
    kTrachea = 6,
    kSkeleton = 7,
    kCardioVascular = 8,
    kNervous = 9,
    kMuscle = 10,
    kKidneyUrogenital = 11,
};

/// Raw TotalSegmentator label (0..117) or user-defined label (118, 119) to
/// one of the 12 consolidated groups. Throws UnknownLabel above 119.
int consolidate_label(int raw);

/// Whole-volume variant; output has consolidated == true.
LabelVolume consolidate_labels(const LabelVolume& raw);

/// Display name of a consolidated group, e.g. "Skeleton Group (Bones, Cartilage)".
std::string_view group_name(int group);

}  // namespace splat6d
