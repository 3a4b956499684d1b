#ifndef BDAUDIT_SVG_HPP
#define BDAUDIT_SVG_HPP

#include <string>

#include "bdaudit/leak.hpp"

namespace bdaudit {

// Static SVG of all reference fits plus the cloud curve, axes labeled
// "poisoned samples" vs "attack accuracy". No timestamp metadata, so equal
// inputs give byte-identical files.
std::string render_curves_svg(const ReferenceLibrary& library, const AccuracyCurve& cloud_curve,
                              const FittedCurve& cloud_fit);

}  // namespace bdaudit

#endif  // BDAUDIT_SVG_HPP
