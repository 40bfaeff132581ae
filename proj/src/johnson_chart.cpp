#include <algorithm>

#include "draftval/trade_eval.hpp"

namespace draftval {

const PickCurve& johnson_chart() {
  static const PickCurve table = [] {
    // Points for picks 1..224 in chart order.
    static constexpr double kPoints[] = {
        3000, 2600, 2200, 1800, 1700, 1600, 1500, 1400, 1350, 1300, 1250, 1200, 1150, 1100, 1050, 1000,
        950,  900,  875,  850,  800,  780,  760,  740,  720,  700,  680,  660,  640,  620,  600,  590,
        580,  560,  550,  540,  530,  520,  510,  500,  490,  480,  470,  460,  450,  440,  430,  420,
        410,  400,  390,  380,  370,  360,  350,  340,  330,  320,  310,  300,  292,  284,  276,  270,
        265,  260,  255,  250,  245,  240,  235,  230,  225,  220,  215,  210,  205,  200,  195,  190,
        185,  180,  175,  170,  165,  160,  155,  150,  145,  140,  136,  132,  128,  124,  120,  116,
        112,  108,  104,  100,  96,   92,   88,   86,   84,   82,   80,   78,   76,   74,   72,   70,
        68,   66,   64,   62,   60,   58,   56,   54,   52,   50,   49,   48,   47,   46,   45,   44,
        43,   42,   41,   40,   39.5, 39,   38.5, 38,   37.5, 37,   36.5, 36,   35.5, 35,   34.5, 34,
        33.5, 33,   32.6, 32.2, 31.8, 31.4, 31,   30.6, 30.2, 29.8, 29.4, 29,   28.6, 28.2, 27.8, 27.4,
        27,   26.6, 26.2, 25.8, 25.4, 25,   24.6, 24.2, 23.8, 23.4, 23,   22.6, 22.2, 21.8, 21.4, 21,
        20.6, 20.2, 19.8, 19.4, 19,   18.6, 18.2, 17.8, 17.4, 17,   16.6, 16.2, 15.8, 15.4, 15,
        14.6, 14.2, 13.8, 13.4, 13,   12.6, 12.2, 11.8, 11.4, 11,   10.6, 10.2, 9.8,  9.4,  9,
        8.6,  8.2,  7.8,  7.4,  7,    6.6,  6.2,  5.8,  5.4,  5,    4.6,  4.2,  3.8,  3.4,  3,
        2.6,  2.2,  2,
    };
    static_assert(sizeof kPoints / sizeof kPoints[0] == 224);
    PickCurve t{};
    t.fill(1.0);
    std::copy(std::begin(kPoints), std::end(kPoints), t.begin());
    return t;
  }();
  return table;
}

CurveTable johnson_table() {
  CurveTable t;
  t.id = "johnson";
  t.mean = johnson_chart();
  return t;
}

}  // namespace draftval
