#include <pwd.h>
#include <unistd.h>

int drop_privileges(const char *login_name)
{
    struct passwd *s;
    s = getpwnam(login_name);
    if (s == NULL)
        return -1;
    if (setgid(s->pw_gid) != 0)
        return -1;
    if (setuid(s->pw_uid) != 0)
        return -1;
    return 0;
}
