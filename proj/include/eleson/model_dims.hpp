#pragma once

#include "eleson/common.hpp"

namespace eleson {

// Network widths. Defaults put the serialized bundle at roughly 8 MB.
struct ModelDims {
    int feature_dim = 128;   // each of the conveyor, behavior and magnetic features
    int lstm_hidden = 32;
    int lstm_kernel = 3;
    int patch_len = 10;      // ConvLSTM local window after pooling
    int pool = 4;            // time-axis mean-pool factor ahead of the backbone
    int fc_width = 1024;
    int gen_hidden1 = 256;
    int gen_hidden2 = 512;
    int aux_hidden = 64;
    int adv_hidden = 64;
    int ev_hidden1 = 256;
    int ev_hidden2 = 64;

    void validate(int window_len) const {
        if (feature_dim <= 0 || lstm_hidden <= 0 || fc_width <= 0)
            throw ConfigError("model widths must be positive");
        if (lstm_kernel < 1 || lstm_kernel % 2 == 0)
            throw ConfigError("lstm_kernel must be odd");
        if (pool < 1 || window_len % pool != 0)
            throw ConfigError("window length " + std::to_string(window_len) +
                              " not divisible by pool factor " + std::to_string(pool));
        const int pooled = window_len / pool;
        if (patch_len < 2 || pooled % patch_len != 0)
            throw ConfigError("pooled length " + std::to_string(pooled) +
                              " not divisible by patch_len " + std::to_string(patch_len));
    }

    // small widths keep unit tests fast
    static ModelDims tiny() {
        ModelDims d;
        d.feature_dim = 16;
        d.lstm_hidden = 6;
        d.patch_len = 10;
        d.pool = 4;
        d.fc_width = 32;
        d.gen_hidden1 = 24;
        d.gen_hidden2 = 32;
        d.aux_hidden = 16;
        d.adv_hidden = 16;
        d.ev_hidden1 = 24;
        d.ev_hidden2 = 12;
        return d;
    }
};

} // namespace eleson
