// Shows the rolling-window statistics for one hand-made daily series.

#include <cstdio>
#include <vector>

#include <cholcast/featurex.hpp>
#include <cholcast/prep.hpp>

using namespace cholcast;

int main() {
    // 60 days of a ramp with a weekly wiggle.
    prep::GovernorateFrame frame;
    frame.gov = "demo";
    frame.start = Date::parse("2017-06-01");
    for (int sid = 0; sid < prep::kSeriesCount; ++sid) frame.series[sid].resize(60, 0.0);
    for (int d = 0; d < 60; ++d)
        frame.series[prep::kNewCases][d] = 0.5 * d + ((d % 7) < 3 ? 4.0 : 0.0);

    const prep::Sample anchor{0, frame.start + 59};
    std::vector<featurex::FeatureDescriptor> descs;
    for (const char* id : {"new_cases__w7__mean", "new_cases__w7__std", "new_cases__w28__linear_slope",
                           "new_cases__w14__number_peaks_1", "new_cases__w56__autocorr_lag1"})
        descs.push_back(featurex::parse_descriptor(id));

    const Matrix f = featurex::extract_features({frame}, {anchor}, descs);
    for (size_t j = 0; j < descs.size(); ++j)
        std::printf("%-32s %.6f\n", descs[j].id().c_str(), f.at(0, j));
    std::printf("full default catalog: %zu columns\n", featurex::default_descriptors().size());
    return 0;
}
