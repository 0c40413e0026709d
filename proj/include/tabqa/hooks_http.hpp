#pragma once

#include <memory>
#include <optional>
#include <string>

#include <httplib.h>

#include "util.hpp"

namespace tabqa {

// One POST per cell: request body is the source string, response body the
// translation. Anything but a 200 degrades to nullopt.
class HttpTranslator {
   public:
    explicit HttpTranslator(const std::string& url) {
        std::string rest;
        if (url.rfind("http://", 0) == 0)
            rest = url.substr(7);
        else
            throw Error("translator url must start with http://");
        const size_t slash = rest.find('/');
        const std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : rest.substr(slash);
        if (hostport.empty()) throw Error("translator url missing host");
        client_ = std::make_unique<httplib::Client>("http://" + hostport);
        client_->set_connection_timeout(5);
        client_->set_read_timeout(30);
    }

    std::optional<std::string> operator()(const std::string& text) {
        auto res = client_->Post(path_, text, "text/plain; charset=utf-8");
        if (!res || res->status != 200) return std::nullopt;
        return res->body;
    }

   private:
    std::unique_ptr<httplib::Client> client_;
    std::string path_;
};

}  // namespace tabqa
