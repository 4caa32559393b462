#pragma once

// Expected frames to complete a rateless block of K packets when each frame
// adds Binomial(n, p) decoded packets and the surplus is discarded.

#include <cmath>
#include <vector>

namespace oracle {

inline double expected_frames_per_block(int block_len, int slots, double p) {
    std::vector<double> pmf(slots + 1);
    for (int k = 0; k <= slots; ++k) {
        double c = 1.0;
        for (int i = 0; i < k; ++i) c = c * (slots - i) / (i + 1);
        pmf[k] = c * std::pow(p, k) * std::pow(1.0 - p, slots - k);
    }
    std::vector<double> e(block_len + 1, 0.0);
    for (int r = block_len - 1; r >= 0; --r) {
        double s = 1.0;
        for (int k = 1; k <= slots; ++k)
            if (r + k < block_len) s += pmf[k] * e[r + k];
        e[r] = s / (1.0 - pmf[0]);
    }
    return e[0];
}

}  // namespace oracle
