#include "splat6d/labels.hpp"

#include <string>

#include "splat6d/error.hpp"

namespace splat6d {

namespace {

// clang-format off
constexpr std::array<std::uint8_t, kMaxRawLabel + 1> kRawToGroup = {
    0,                                   // 0 background/other
    1,                                   // 1 spleen
    11, 11,                              // 2-3 kidneys
    3,                                   // 4 gallbladder
    2,                                   // 5 liver
    3, 3,                                // 6-7 stomach, pancreas
    4, 4,                                // 8-9 adrenal glands
    5, 5, 5, 5, 5,                       // 10-14 lung lobes
    3,                                   // 15 esophagus
    6,                                   // 16 trachea
    4,                                   // 17 thyroid
    3, 3, 3,                             // 18-20 small bowel, duodenum, colon
    11, 11, 11, 11,                      // 21-24 bladder, prostate, kidney cysts
    7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7,  // 25-37 sacrum, vertebrae S1..T7
    7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7,  // 38-50 vertebrae T6..C1
    8, 8, 8, 8, 8, 8, 8, 8, 8,           // 51-59 heart and vessels
    8, 8, 8, 8, 8, 8, 8, 8, 8,           // 60-68
    7, 7, 7, 7, 7, 7, 7, 7, 7, 7,        // 69-78 humerus .. hip
    9,                                   // 79 spinal cord
    10, 10, 10, 10, 10, 10, 10, 10, 10, 10,  // 80-89 gluteus, autochthon, iliopsoas
    9,                                   // 90 brain
    7,                                   // 91 skull
    7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7,  // 92-103 left ribs
    7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7,  // 104-115 right ribs
    7, 7,                                // 116-117 sternum, costal cartilages
    8, 8,                                // 118-119 coronary / pulmonary arteries
};
// clang-format on

constexpr std::array<std::string_view, kNumGroups> kGroupNames = {
    "Background/Other",
    "Spleen",
    "Liver",
    "Digestive Group (Stomach, Bowels, Colon, GB, Panc, Eso)",
    "Gland Group (Adrenals, Thyroid)",
    "Lung Group",
    "Trachea",
    "Skeleton Group (Bones, Cartilage)",
    "CardioVascular Group (Heart & Vessels)",
    "Nervous System Group (Brain, Spinal Cord)",
    "Muscle Group",
    "Kidney/Urogenital Group (Kidneys, Cysts, Bladder, Prostate)",
};

}  // namespace

int consolidate_label(int raw) {
    if (raw < 0 || raw > kMaxRawLabel) {
        throw Error(ErrorCode::UnknownLabel, "raw label " + std::to_string(raw));
    }
    return kRawToGroup[static_cast<std::size_t>(raw)];
}

LabelVolume consolidate_labels(const LabelVolume& raw) {
    if (raw.consolidated) return raw;
    LabelVolume out;
    out.geometry = raw.geometry;
    out.consolidated = true;
    out.labels.resize(raw.labels.size());
    for (std::size_t i = 0; i < raw.labels.size(); ++i) {
        out.labels[i] = static_cast<std::uint8_t>(consolidate_label(raw.labels[i]));
    }
    return out;
}

std::string_view group_name(int group) {
    if (group < 0 || group >= kNumGroups) {
        throw Error(ErrorCode::UnknownLabel, "group " + std::to_string(group));
    }
    return kGroupNames[static_cast<std::size_t>(group)];
}

}  // namespace splat6d
