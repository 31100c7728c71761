#pragma once

#include <string>

#include "stoctot/backend.hpp"

namespace stoctot {

struct HttpBackendConfig {
    std::string base_url = "http://localhost:8000"; // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4";
    std::string api_key_env = "STOCTOT_API_KEY"; // keys come from the environment only
    int timeout_seconds = 60;
    int max_attempts = 3;
    int backoff_initial_ms = 250; // doubled per retry, capped
    int backoff_cap_ms = 4000;
};

// Chat-completions client over the de-facto JSON wire format. Safe for
// concurrent calls; retries non-2xx and transport failures with capped
// exponential backoff, then throws TransportError carrying the attempt count.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

} // namespace stoctot
