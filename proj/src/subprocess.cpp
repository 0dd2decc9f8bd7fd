#include "llbench/subprocess.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "llbench/error.hpp"

namespace llb {

CommandResult run_command(const std::vector<std::string>& argv) {
    if (argv.empty()) throw ConfigError("empty command");

    int pipe_fd[2];
    if (::pipe(pipe_fd) != 0) throw IoError(std::string("pipe failed: ") + std::strerror(errno));

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(pipe_fd[0]);
        ::close(pipe_fd[1]);
        throw IoError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::close(pipe_fd[0]);
        ::dup2(pipe_fd[1], STDOUT_FILENO);
        ::dup2(pipe_fd[1], STDERR_FILENO);
        ::close(pipe_fd[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        // Only reached when exec failed.
        std::fprintf(stderr, "exec %s failed: %s\n", args[0], std::strerror(errno));
        ::_exit(127);
    }

    ::close(pipe_fd[1]);
    std::string output;
    char buf[4096];
    for (;;) {
        const ssize_t n = ::read(pipe_fd[0], buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (n == 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }
    ::close(pipe_fd[0]);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw IoError(std::string("waitpid failed: ") + std::strerror(errno));
    }
    if (WIFSIGNALED(status))
        throw ProcessError("command '" + argv[0] + "' killed by signal " +
                               std::to_string(WTERMSIG(status)),
                           -WTERMSIG(status), output);
    return CommandResult{WEXITSTATUS(status), output};
}

std::vector<std::string> expand_command_template(
    const std::string& command_template, const std::map<std::string, std::string>& values,
    const std::vector<std::string>& optional_placeholders) {
    std::vector<std::string> tokens;
    std::istringstream stream(command_template);
    std::string token;
    while (stream >> token) tokens.push_back(token);

    std::vector<std::string> out;
    for (std::string& t : tokens) {
        for (const auto& [name, value] : values) {
            const std::string placeholder = "{" + name + "}";
            std::size_t pos = 0;
            while ((pos = t.find(placeholder, pos)) != std::string::npos) {
                t.replace(pos, placeholder.size(), value);
                pos += value.size();
            }
        }
        bool drop = false;
        for (const std::string& name : optional_placeholders) {
            if (t.find("{" + name + "}") != std::string::npos) {
                drop = true;
                break;
            }
        }
        if (drop) continue;
        const std::size_t open = t.find('{');
        if (open != std::string::npos && t.find('}', open) != std::string::npos)
            throw ConfigError("unresolved placeholder in command token '" + t + "'");
        out.push_back(std::move(t));
    }
    if (out.empty()) throw ConfigError("command template expanded to nothing");
    return out;
}

}  // namespace llb
