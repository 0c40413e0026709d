#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <optional>
#include <string>

#include "util.hpp"

namespace tabqa {

// Persistent line-oriented translator: one source string per request line,
// one translation per response line. Any protocol failure parks the process
// and every later call degrades to nullopt (pass-through upstream).
class SubprocessTranslator {
   public:
    explicit SubprocessTranslator(const std::string& command) {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0) throw Error("pipe failed");
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw Error("pipe failed");
        }
        pid_ = fork();
        if (pid_ < 0) {
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            throw Error("fork failed");
        }
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        signal(SIGPIPE, SIG_IGN);
    }

    SubprocessTranslator(const SubprocessTranslator&) = delete;
    SubprocessTranslator& operator=(const SubprocessTranslator&) = delete;

    ~SubprocessTranslator() {
        if (in_ >= 0) close(in_);
        if (out_ >= 0) close(out_);
        if (pid_ > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    std::optional<std::string> operator()(const std::string& text) {
        if (dead_ || text.find('\n') != std::string::npos) return std::nullopt;
        std::string line = text;
        line.push_back('\n');
        size_t sent = 0;
        while (sent < line.size()) {
            const ssize_t n = write(in_, line.data() + sent, line.size() - sent);
            if (n <= 0) {
                dead_ = true;
                return std::nullopt;
            }
            sent += static_cast<size_t>(n);
        }
        std::string reply;
        for (;;) {
            const size_t nl = buf_.find('\n');
            if (nl != std::string::npos) {
                reply = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return reply;
            }
            char chunk[4096];
            const ssize_t n = read(out_, chunk, sizeof chunk);
            if (n <= 0) {
                dead_ = true;
                return std::nullopt;
            }
            buf_.append(chunk, static_cast<size_t>(n));
        }
    }

    bool alive() const { return !dead_; }

   private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    bool dead_ = false;
    std::string buf_;
};

}  // namespace tabqa
