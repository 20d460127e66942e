// Generated by tests/oracle/make_fixtures.py (scipy/HiGHS). Do not edit.
#pragma once

#include <limits>
#include <vector>

namespace oracle {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline constexpr double kCase9Cost = 362.0000000000;
inline constexpr double kCase14Cost = 5180.0000000000;
inline constexpr double kCase30Cost = 310.0975886754;
inline constexpr double kCase118Cost = 84840.0000000001;
inline constexpr double kTri3Cost = 2700.0000000000;
inline constexpr double kCase14CongestedCost = 6941.7241779918;
inline constexpr double kCase118CongestedCost = 89467.9924626624;
inline constexpr int kCase118Buses = 118;
inline constexpr int kCase118Lines = 186;
inline constexpr int kCase118SplitSpecs = 994;
inline constexpr double kCase300Cost = 470517.0000000007;

// cost after opening each line; NaN = islanded or infeasible
inline const std::vector<double> kTri3LineOpen = {2900.0000000000, 1500.0000000000, kNaN};
inline constexpr int kTri3BestLine = 1;
inline constexpr double kTri3BestLineCost = 1500.0000000000;
inline constexpr int kTri3SplitCount = 12;
// best restricted split: bus 0 moves 1, gen_only
inline constexpr double kTri3BestSplitCost = 1500.0000000000;
inline constexpr double kTri3BestActionCost = 1500.0000000000;

// cost after opening each line; NaN = islanded or infeasible
inline const std::vector<double> kCase14CongestedLineOpen = {6875.1462467015, 7598.9917196993, 7709.9916013031, 7927.6241559928, 7549.9774692679, 6925.8501303275, 7896.1567419185, 6902.2224748454, 6953.5183706842, 7419.9488190785, 6967.7814818259, 6946.5950455284, 6970.5399449818, kNaN, 6882.1116261314, 6882.1116261314, 6882.1116261314, 6938.8847893079, 6942.3999874506, 6959.0759885897};
inline constexpr int kCase14CongestedBestLine = 0;
inline constexpr double kCase14CongestedBestLineCost = 6875.1462467015;
inline constexpr int kCase14CongestedSplitCount = 95;
// best restricted split: bus 0 moves 1, none
inline constexpr double kCase14CongestedBestSplitCost = 6875.1462467015;
inline constexpr double kCase14CongestedBestActionCost = 6875.1462467015;

// cost after opening each line; NaN = islanded or infeasible
inline const std::vector<double> kCase118CongestedLineOpen = {89472.8279805074, 89459.7967172809, 89457.0769387998, 89457.7891179770, 89457.7938783616, 89461.2420939799, kNaN, 91897.0200485430, kNaN, 89457.4145615648, 89457.3497612438, 89474.4562403732, 89477.9382798119, 89473.1891352300, 89471.4879797360, 89450.5868965130, 89451.8747552969, 89468.2423680033, 89457.2834821119, 89464.1641173640, 89634.9364869924, 89490.4526546563, 89426.9163386502, 89461.2805369188, 89602.0722001998, 89454.1796885997, 89869.8234393145, 90078.5674110526, 90227.6702480084, 89411.9523774016, 90662.3176689148, 88988.4438414791, 91043.8333577567, 89529.2857109166, 89446.6597120300, 90796.8023132610, 89457.2627680598, 92058.4847229985, 89797.4296236494, 89330.0112430137, 90150.7008292454, 89424.6012852062, 89484.2971809573, 89462.1461074605, 89445.5901829295, 89478.9194054513, 89467.1283370863, 89447.3944978113, 89460.7339026373, 89361.0438351503, 89547.6070773509, 89134.5112823592, 89209.4082514562, 89442.0106728485, 89330.1679552843, 89405.1485341315, 89617.4280069845, 89692.7682826745, 90054.9276443233, 89722.0247845825, 90350.9384469637, 89790.6321223277, 89431.6724147705, 89447.3670600182, 89467.7890949938, 90327.5631648303, 90327.5631648303, 89668.0710704851, 89479.8243509706, 89403.2666264831, 89386.7813397977, 89452.3031715492, 89463.2705770358, 89477.2844840465, 89427.0194098353, 89427.3597015831, 89466.2494642021, 89451.8757894848, 89460.6198601339, 89442.0273799347, 89425.9884474720, 89463.9502442670, 89453.1013890001, 89476.9726180668, 89478.7123856114, 89479.3737710909, 89483.3466040549, 89469.0433683734, 89472.2740472960, 89480.5888885802, 89468.1132481482, 89468.0489218080, 89535.4939043450, 89535.4939043450, 89448.3691403868, 87070.4705265033, 89431.9752780205, 89653.7945880875, 89653.7945880875, 89464.4624754185, 89464.3144759291, 88315.3838659252, 89464.6296041748, 87846.9213707062, 89543.0735530816, 89525.2264875181, 88886.6082656482, 89708.4453665229, 89518.6148652414, 89578.0767467235, 89483.2510227175, 89545.6399667628, kNaN, 89457.7215609778, 89476.0200306062, 89555.7929436231, 89526.6547506353, 89511.8035595636, 89470.2570865089, 89498.4384918295, 89463.1925119167, 89469.9577625725, 89478.2614294529, 89471.7057198081, 89473.6738861721, 89418.1147311019, 89418.1147311018, 89475.3468601825, 89473.0225027787, 89469.1976166405, 89469.9454197164, 89469.4523767931, kNaN, kNaN, 89468.7222781518, 89469.2212907941, 89469.9310943144, 89468.6379241593, 89469.7793705984, 89467.7545104676, 89465.6826130653, 89469.7674866315, 89467.3840401185, 89467.3044940311, 89467.3783780618, 89467.4639704907, 89467.7767191724, 89467.0743546061, 89469.3975014577, 89467.7949047909, 89467.3388044770, 89466.6526719226, 89466.3513776195, 89467.9495863762, 89469.5338582412, 89467.8753768853, 89466.7938672190, 89465.6216203264, 89465.6216203264, 89468.1805250761, 89467.7186484564, 89467.8041811637, 89467.9924626624, 89467.9924626624, 89467.9924626624, 89467.9924626623, 89467.9924626624, 89467.9924626623, 89467.9924626624, 89467.9924626624, 89467.9924626623, 89467.9924626624, 89467.9924626624, 89467.9924626623, 89467.9924626623, kNaN, kNaN, 89571.8281516776, 89642.7961660199, 89450.4713488585, 89494.6010833677, 89462.2392780609, kNaN, kNaN, 89449.6358723356, 89469.9480869746};
inline constexpr int kCase118CongestedBestLine = 95;
inline constexpr double kCase118CongestedBestLineCost = 87070.4705265033;
inline constexpr int kCase118CongestedSplitCount = 994;
// best restricted split: bus 64 moves 37, gen_only
inline constexpr double kCase118CongestedBestSplitCost = 86139.7868851441;
inline constexpr double kCase118CongestedBestActionCost = 86139.7868851441;

}  // namespace oracle
