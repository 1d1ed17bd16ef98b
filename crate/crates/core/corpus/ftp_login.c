#include <stdio.h>
#include <string.h>
#include <pwd.h>
#include <crypt.h>

#define USERLEN 32
#define PASSLEN 64
#define STATE_CONNECTED 0
#define STATE_USER 1
#define STATE_LOGIN_OK 2

int login_state = STATE_CONNECTED;
char user[USERLEN];

int check_user_password(const char *name, const char *password)
{
    struct passwd *pw = getpwnam(name);
    if (pw == NULL)
        return 1;
    if (strcmp(crypt(password, pw->pw_passwd), pw->pw_passwd) != 0)
        return 1;
    return 0;
}

int command_user(char *params)
{
    if (login_state != STATE_CONNECTED) {
        control_printf("503 Already logged in.");
        return 1;
    }
    strncpy(user, params, USERLEN - 1);
    login_state = STATE_USER;
    control_printf("331 Password please.");
    return 0;
}

int command_pass(char *params)
{
    char password[PASSLEN];
    strncpy(password, params, PASSLEN - 1);
    password[PASSLEN - 1] = '\0';
    if (check_user_password(user, password) != 0) {
        control_printf("530 Login incorrect.");
        login_state = STATE_CONNECTED;
        return 1;
    }
    login_state = STATE_LOGIN_OK;
    control_printf("230 User logged in.");
    return 0;
}
