#include "ryno/gateway.hpp"

#include <algorithm>
#include <cmath>

#include "ryno/error.hpp"

namespace ryno {

std::string_view to_string(Purpose p) {
    return p == Purpose::Dialogue ? "dialogue" : "classification";
}

void ChatRequest::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ValidationError("temperature must lie in [0, 2]");
    if (max_reply_tokens < 1) throw ValidationError("max_reply_tokens must be >= 1");
    if (timeout.count() <= 0) throw ValidationError("timeout must be positive");
}

std::chrono::milliseconds RetryPolicy::backoff_for(int attempt) const {
    double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 1);
    ms = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

}  // namespace ryno
